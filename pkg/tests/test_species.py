import math

import pytest

from ionlogic.errors import UnknownSpeciesError
from ionlogic.species import CONSTANTS, lookup, mass_ratio, registered_labels


def test_registry_contents():
    assert set(registered_labels()) == {"40Ca+", "43Ca+", "86Sr+", "88Sr+"}


def test_lookup_tolerates_missing_plus():
    assert lookup("88Sr") is lookup("88Sr+")


def test_unknown_label_raises_with_label():
    with pytest.raises(UnknownSpeciesError) as info:
        lookup("41Ca+")
    assert info.value.label == "41Ca+"
    assert "41Ca+" in str(info.value)
    assert isinstance(info.value, KeyError)


def test_integer_masses():
    u = 1.66053906660e-27
    assert lookup("40Ca+").mass == pytest.approx(40 * u, rel=1e-9)
    assert mass_ratio(lookup("88Sr+"), lookup("40Ca+")) == pytest.approx(2.2)


def test_precise_mass_close_to_integer_mass():
    for label in registered_labels():
        s = lookup(label)
        assert s.with_precise_mass().mass == pytest.approx(s.mass, rel=2e-3)
        assert s.with_precise_mass().mass != s.mass


def test_wavelengths_and_matrix_elements():
    ca, sr = lookup("40Ca+"), lookup("88Sr+")
    assert ca.qubit_wavelength == pytest.approx(729e-9)
    assert sr.qubit_wavelength == pytest.approx(674e-9)
    assert ca.quad_matrix_element_rel == pytest.approx(0.7)
    assert sr.quad_matrix_element_rel == 1.0
    assert ca.wavevector == pytest.approx(2 * math.pi / 729e-9)


def test_constants_from_codata():
    assert CONSTANTS.hbar == pytest.approx(1.054571817e-34)
    assert CONSTANTS.coulomb_constant == pytest.approx(2.307077e-28, rel=1e-6)
