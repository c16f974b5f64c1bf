import numpy as np
import pytest

import blockade.hilbert as hb
from blockade.hilbert import (
    FockConfig,
    DimensionError,
    annihilation,
    assemble_hamiltonian,
    build_space,
    creation,
    number_op,
)
from blockade.models import (
    FourCavityParams,
    PhotonicRingParams,
    preset_llpb_four_cavity,
    preset_conventional,
    preset_two_ring_photonic,
)


def test_dimension_examples():
    assert FockConfig([2]).dimension == 2
    assert FockConfig([16, 8, 8, 8]).dimension == 8192


def test_cutoff_validation():
    with pytest.raises(DimensionError):
        FockConfig([1, 4])
    with pytest.raises(DimensionError):
        FockConfig([2] * 40)  # dimension overflow


def test_site_major_indexing():
    basis = build_space(FockConfig([3, 3]))
    # last site fastest: |1,2> -> 1*3 + 2
    assert basis.index_of((1, 2)) == 5
    assert basis.occupation_of(5) == (1, 2)


@pytest.mark.parametrize("cutoffs", [[2], [3, 3], [4, 3, 2], [2, 2, 2, 2, 2]])
def test_index_maps_are_bijections(cutoffs):
    basis = build_space(FockConfig(cutoffs))
    assert basis.dimension <= 10_000
    seen = set()
    for idx in range(basis.dimension):
        occ = basis.occupation_of(idx)
        assert basis.index_of(occ) == idx
        seen.add(occ)
    assert len(seen) == basis.dimension


def test_ladder_amplitudes_single_mode():
    cfg = FockConfig([3])
    a = annihilation(0, cfg).dense()
    state2 = np.array([0, 0, 1], dtype=complex)
    out = a @ state2
    assert np.allclose(out, [0, np.sqrt(2), 0])


def test_creation_is_adjoint_of_annihilation():
    cfg = FockConfig([5, 3])
    a = annihilation(0, cfg).dense()
    adag = creation(0, cfg).dense()
    assert np.array_equal(adag, a.conj().T)


def test_canonical_commutator_below_truncation():
    cfg = FockConfig([6])
    a = annihilation(0, cfg).dense()
    comm = a @ a.conj().T - a.conj().T @ a
    for n in range(cfg.cutoffs[0] - 1):
        assert abs(comm[n, n] - 1.0) < 1e-14


def test_tensor_embedding_identity_on_other_site():
    cfg = FockConfig([3, 4])
    a0 = annihilation(0, cfg).dense()
    local = np.diag(np.sqrt(np.arange(1, 3)), k=1)
    assert np.allclose(a0, np.kron(local, np.eye(4)))


def test_cross_site_commutators_vanish():
    cfg = FockConfig([3, 3])
    a0 = annihilation(0, cfg).dense()
    a1dag = creation(1, cfg).dense()
    assert np.max(np.abs(a0 @ a1dag - a1dag @ a0)) < 1e-14


def test_number_operator_diagonal():
    cfg = FockConfig([4, 3])
    basis = build_space(cfg)
    n1 = number_op(1, cfg).dense()
    expected = np.diag(basis.occupations[:, 1].astype(float))
    assert np.allclose(n1, expected)


def test_out_of_range_site():
    cfg = FockConfig([3])
    with pytest.raises(IndexError):
        annihilation(1, cfg)


def test_single_cavity_hamiltonian_is_z_times_number():
    net = preset_conventional(alpha=0.0, delta=0.0, gamma=1.0, F_d=0.0)
    cfg = FockConfig([4])
    H = assemble_hamiltonian(net, cfg).dense()
    assert np.allclose(H, np.diag([0, -0.5j, -1.0j, -1.5j]))


def test_lossless_undriven_hamiltonian_hermitian():
    params = FourCavityParams(k=16.0, J=0.1227, J_prime=0.02454, alpha=0.001227,
                              delta=0.3, gamma=0.0)
    net = preset_llpb_four_cavity(params, F_d=0.0)
    H = assemble_hamiltonian(net, FockConfig([3, 3, 3, 3]))
    assert H.is_hermitian(tol=1e-12)


def test_one_photon_block_reproduces_coupling_matrix():
    params = FourCavityParams(k=16.0, J=0.1227, J_prime=0.02454, alpha=0.001227,
                              delta=0.02, gamma=0.7)
    net = preset_llpb_four_cavity(params, F_d=0.0)
    cfg = FockConfig([3, 3, 3, 3])
    basis = build_space(cfg)
    H = assemble_hamiltonian(net, cfg).dense()
    idx = [basis.index_of(tuple(1 if s == i else 0 for s in range(4))) for i in range(4)]
    block = H[np.ix_(idx, idx)]
    expected = net.couplings + np.diag(net.complex_detunings())
    assert np.max(np.abs(block - expected)) < 1e-12


def test_two_ring_loss_pattern():
    net = preset_two_ring_photonic(PhotonicRingParams(), F_d=0.0)
    cfg = FockConfig([2, 2, 2, 2])
    basis = build_space(cfg)
    H = assemble_hamiltonian(net, cfg).dense()
    idx = [basis.index_of(tuple(1 if s == i else 0 for s in range(4))) for i in range(4)]
    diag = np.array([H[i, i] for i in idx])
    # ring-1 modes carry gamma + gamma_in + gamma_out = 10 ueV, ring 2 carries 5 ueV
    assert np.allclose(-2 * diag.imag, [10.0, 10.0, 5.0, 5.0])


def test_cross_kerr_term():
    net = preset_two_ring_photonic(PhotonicRingParams(), F_d=0.0)
    cfg = FockConfig([2, 2, 2, 2])
    basis = build_space(cfg)
    H = assemble_hamiltonian(net, cfg).dense()
    both = basis.index_of((1, 1, 0, 0))
    single = basis.index_of((1, 0, 0, 0))
    # <11|H|11> - 2 <10|H_diag|10> leaves the cross-Kerr energy 2 alpha
    ax = net.cross_kerr_pairs[0][2]
    lone = H[single, single] + H[basis.index_of((0, 1, 0, 0)), basis.index_of((0, 1, 0, 0))]
    assert abs((H[both, both] - lone) - 2 * ax) < 1e-15


def test_drive_term():
    from blockade.models import CavityNetwork
    net = CavityNetwork(n_sites=1, couplings=np.zeros((1, 1)), detuning=[0.0],
                        loss=[0.0], drive_site=0, drive_amplitude=1e-3, signal_site=0)
    H = assemble_hamiltonian(net, FockConfig([3]), include_drive=True).dense()
    assert abs(H[1, 0] - 1e-3) < 1e-18 and abs(H[0, 1] - 1e-3) < 1e-18


def test_sparse_dense_agreement(monkeypatch):
    params = FourCavityParams(k=4.0, J=0.5, J_prime=0.25, alpha=0.01,
                              delta=0.1, gamma=0.8)
    net = preset_llpb_four_cavity(params, F_d=1e-4)
    cfg = FockConfig([3, 3, 3, 3])  # dim 81: dense by default
    dense = assemble_hamiltonian(net, cfg, include_drive=True).dense()
    monkeypatch.setattr(hb, "SPARSE_THRESHOLD", 1)
    sparse = assemble_hamiltonian(net, cfg, include_drive=True).dense()
    assert np.max(np.abs(dense - sparse)) < 1e-12


def test_asymmetric_couplings_rejected():
    from blockade.models import CavityNetwork
    with pytest.raises(ValueError):
        CavityNetwork(n_sites=2, couplings=[[0.0, 1.0], [0.5, 0.0]],
                      detuning=[0.0, 0.0], loss=[1.0, 1.0])


def test_dimension_mismatch_rejected():
    net = preset_conventional(alpha=1.0, delta=0.0, gamma=1.0)
    with pytest.raises(Exception):
        assemble_hamiltonian(net, FockConfig([3, 3]))
