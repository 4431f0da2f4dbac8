"""Basic import tests to verify package structure."""


def test_import_pyopc():
    """Test that the main package can be imported."""
    import pyopc
    assert pyopc.__version__


def test_import_market():
    """Test that the market module can be imported."""
    from pyopc import market
    assert market.compute_metrics is not None


def test_import_simulate():
    """Test that the simulate module can be imported."""
    from pyopc import simulate
    assert simulate.simulate_ensemble is not None


def test_import_replicate():
    """Test that the replicate module can be imported."""
    from pyopc import replicate
    assert replicate.solve_heat is not None


def test_import_utility_compress_verify():
    """Test that the remaining library modules can be imported."""
    from pyopc import compress, utility, verify
    assert utility.calibrate is not None
    assert compress.select_subset is not None
    assert verify.CheckReport is not None


def test_import_cli():
    """Test that the command-line entry point can be imported."""
    from pyopc.cli import main
    assert callable(main)


def test_error_exit_codes():
    """Every error family maps to its documented exit status."""
    from pyopc import errors
    assert errors.ConfigError("x").exit_code == 1
    assert errors.EllipticityViolated("x").exit_code == 1
    assert errors.GoalWithZeroRisk("x").exit_code == 2
    assert errors.VerificationFailed("x").exit_code == 3
    assert str(errors.CalibrationFailed("no root")) == "[2] no root"
