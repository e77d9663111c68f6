from hypothesis import HealthCheck, settings

# deterministic property tests: the acceptance artifact must not depend on
# the draw of the day
settings.register_profile(
    "deterministic",
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("deterministic")
