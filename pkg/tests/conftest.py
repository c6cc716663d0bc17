def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: seeded acceptance criteria (slow at full level)"
    )
