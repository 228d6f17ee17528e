from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from reference import matrix_game_value_by_vertices
from toys import fd_relative_error, lipschitz_excess

from pfminimax.core import ArgumentError, ParseError, make_rng
from pfminimax.metrics import gap_dual_y, gap_lmo_x, gap_po_x
from pfminimax.problems import (
    DL_DESK_SIZES,
    DL_PAPER_SIZES,
    Samples,
    dictionary_learning,
    dl_generate,
    lipschitz_dl,
    lipschitz_rc,
    matrix_game,
    quadratic_saddle,
    random_matrix_game,
    random_quadratic_saddle,
    rc_generate,
    read_libsvm,
    read_matrix_csv,
    read_mmx,
    robust_classification,
    write_libsvm,
    write_matrix_csv,
    write_mmx,
)


@pytest.fixture(scope="module")
def dl():
    d = dl_generate(**DL_DESK_SIZES, rng=make_rng(0))
    return dictionary_learning(d.A, d.A_prime, d.C_tilde, D0_prime=d.D0_prime, C0_prime=d.C0_prime)


@pytest.fixture(scope="module")
def rc():
    F, labels = rc_generate(50, 20, 3, make_rng(0))
    return robust_classification((F, labels), k=3)


@pytest.fixture(scope="module")
def qs():
    return random_quadratic_saddle(4, 3, 1.0, 0.5, make_rng(2))


@pytest.fixture(scope="module")
def game():
    return random_matrix_game(5, 4, make_rng(3))


def _problems(dl, rc, qs, game):
    return {"dl": dl, "rc": rc, "qs": qs, "game": game}


# ---------------------------------------------------------------- shared invariant suite


@pytest.mark.parametrize("name", ["dl", "rc", "qs", "game"])
class TestInvariantSuite:
    def test_fd_gradients(self, name, dl, rc, qs, game):
        p = _problems(dl, rc, qs, game)[name]
        g = make_rng(7)
        for _ in range(5):
            x, y = p.x_set.sample(g, 1)[0], p.y_set.sample(g, 1)[0]
            assert fd_relative_error(p, x, y) <= 1e-5

    def test_lipschitz_sampling(self, name, dl, rc, qs, game):
        p = _problems(dl, rc, qs, game)[name]
        assert lipschitz_excess(p, make_rng(8), 100) <= 1e-8

    def test_strong_concavity(self, name, dl, rc, qs, game):
        p = _problems(dl, rc, qs, game)[name]
        g = make_rng(9)
        for _ in range(50):
            x = p.x_set.sample(g, 1)[0]
            y1, y2 = p.y_set.sample(g, 2)
            lhs = -float((p.grad_y(x, y1) - p.grad_y(x, y2)) @ (y1 - y2))
            assert lhs >= p.mu * float(np.sum((y1 - y2) ** 2)) - 1e-10

    def test_initial_point_feasible(self, name, dl, rc, qs, game):
        p = _problems(dl, rc, qs, game)[name]
        x, y = p.initial_point()
        assert p.x_set.contains(x) and p.y_set.contains(y)

    def test_grads_consistent(self, name, dl, rc, qs, game):
        p = _problems(dl, rc, qs, game)[name]
        x, y = p.x_set.sample(make_rng(1), 1)[0], p.y_set.sample(make_rng(2), 1)[0]
        gx, gy = p.grads(x, y)
        np.testing.assert_allclose(gx, p.grad_x(x, y), rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(gy, p.grad_y(x, y), rtol=1e-13, atol=1e-15)


# ---------------------------------------------------------------- matrix game


class TestMatrixGame:
    @pytest.mark.parametrize("A", [np.eye(2), [[0.0, 1.0], [1.0, 0.0]]])
    def test_values(self, A):
        game = matrix_game(A)
        assert game.optimal_value() == pytest.approx(0.5, abs=1e-12)
        assert matrix_game_value_by_vertices(A) == pytest.approx(0.5, abs=1e-9)

    def test_identity_saddle(self):
        x, y = matrix_game(np.eye(2)).saddle_point()
        np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(y, [0.5, 0.5], atol=1e-12)

    def test_zero_game(self):
        game = matrix_game(np.zeros((3, 2)))
        assert game.optimal_value() == 0.0
        x, y = game.x_set.sample(make_rng(0), 1)[0], game.y_set.sample(make_rng(1), 1)[0]
        assert gap_lmo_x(game, x, y) == 0.0 and gap_dual_y(game, x, y) == 0.0

    def test_empty(self):
        with pytest.raises(ArgumentError):
            matrix_game(np.zeros((0, 2)))

    def test_gaps_vanish_at_lp_saddle(self):
        game = random_matrix_game(10, 10, make_rng(0))
        x, y = game.saddle_point()
        assert abs(gap_lmo_x(game, x, y)) <= 1e-8
        assert abs(gap_dual_y(game, x, y)) <= 1e-8


# ---------------------------------------------------------------- quadratic saddle


class TestQuadraticSaddle:
    def test_decoupled(self):
        p = quadratic_saddle(1.0, 2.0, np.zeros((2, 2)), [0.1, 0.2], [0.3, -0.1], (1.0, 1.0))
        xs, ys = p.saddle_point()
        np.testing.assert_allclose(xs, [0.1, 0.2], atol=1e-15)
        np.testing.assert_allclose(ys, [0.3, -0.1], atol=1e-15)

    def test_symmetric_origin(self):
        p = quadratic_saddle(1.0, 1.0, np.eye(2), np.zeros(2), np.zeros(2), (1.0, 1.0))
        xs, ys = p.saddle_point()
        assert np.all(np.abs(xs) < 1e-15) and np.all(np.abs(ys) < 1e-15)

    def test_random_fixture(self):
        g = make_rng(21)
        B = g.standard_normal((3, 3)) / 3
        xh, yh = 0.2 * g.standard_normal(3), 0.2 * g.standard_normal(3)
        p = quadratic_saddle(1.0, 1.0, B, xh, yh, (3.0, 3.0))
        xs, ys = p.saddle_point()
        assert np.linalg.norm(p.grad_x(xs, ys)) <= 1e-10
        assert np.linalg.norm(p.grad_y(xs, ys)) <= 1e-10

    def test_all_gaps_vanish(self, qs):
        xs, ys = qs.saddle_point()
        assert abs(gap_lmo_x(qs, xs, ys)) <= 1e-8
        assert abs(gap_po_x(qs, xs, ys, 0.5)) <= 1e-8
        assert abs(gap_dual_y(qs, xs, ys)) <= 1e-8

    def test_boundary_saddle_rejected(self):
        with pytest.raises(ArgumentError, match="radius"):
            quadratic_saddle(1.0, 1.0, np.zeros((1, 1)), [2.0], [0.0], (1.0, 1.0))


# ---------------------------------------------------------------- dictionary learning


class TestDictionaryLearning:
    def test_paper_shapes(self):
        d = dl_generate(**DL_PAPER_SIZES, rng=make_rng(0))
        assert d.A.shape == (100, 500) and d.A_prime.shape == (100, 103)
        assert d.C_tilde.shape == (60, 500)
        assert d.D0_prime.shape == (100, 60) and d.C0_prime.shape == (60, 103)

    def test_desk_shapes(self):
        d = dl_generate(**DL_DESK_SIZES, rng=make_rng(0))
        assert d.A.shape == (20, 50) and d.C_tilde.shape == (12, 50)

    def test_determinism(self):
        a = dl_generate(**DL_DESK_SIZES, rng=make_rng(5))
        b = dl_generate(**DL_DESK_SIZES, rng=make_rng(5))
        for u, v in zip(a, b):
            assert u.tobytes() == v.tobytes()

    def test_p_exceeds_q(self):
        with pytest.raises(ArgumentError):
            dl_generate(m=4, n=5, p=4, l=2, q=3, n_prime=4, rng=make_rng(0))

    def test_zero_dual_is_reconstruction(self, dl):
        x = dl.x_set.sample(make_rng(3), 1)[0]
        C, D = dl.unpack(x)
        R = dl.A_prime - D @ C
        assert dl.value(x, np.zeros(1)) == pytest.approx(np.sum(R**2) / (2 * dl.n_prime), rel=1e-13)

    def test_exact_fidelity(self):
        d = dl_generate(**DL_DESK_SIZES, rng=make_rng(1))
        p = dictionary_learning(d.A, d.A_prime, d.C_tilde)
        p_old = DL_DESK_SIZES["p"]
        # D' = [D, anything]: recover D from A = D C by least squares on the top block
        C = d.C_tilde[:p_old]
        D = d.A @ np.linalg.pinv(C)
        D_prime = np.hstack([D, d.D0_prime[:, p_old:]])
        x = p.pack(np.zeros((p.q, p.n_prime)), D_prime)
        assert p.grad_y(x, np.zeros(1))[0] == pytest.approx(-p.delta, abs=1e-12)
        assert p.best_response_y(x)[0] == 0.0

    def test_guards(self):
        d = dl_generate(m=4, n=5, p=2, l=2, q=3, n_prime=4, rng=make_rng(0))
        with pytest.raises(ArgumentError):
            dictionary_learning(d.A, d.A_prime, d.C_tilde, delta=0.0)
        with pytest.raises(ArgumentError):
            dictionary_learning(d.A, d.A_prime, np.zeros_like(d.C_tilde))

    def test_constants(self, dl):
        Lxx, Lyx, Lyy = lipschitz_dl(dl.A, dl.A_prime, dl.C_tilde, dl.r, dl.q, dl.B, dl.n,
                                     dl.n_prime)
        assert Lyy == 0.0 and (Lxx, Lyx) == (dl.Lxx, dl.Lyx)
        c2 = np.linalg.norm(dl.C_tilde, 2)
        expected = np.sqrt(3) * (np.linalg.norm(dl.A) + np.sqrt(dl.q) * c2) * c2 / dl.n
        assert Lyx == pytest.approx(expected, rel=1e-14)

    def test_smoothed_best_response(self, dl):
        x = dl.x_set.sample(make_rng(4), 1)[0]
        for beta in (1e-3, 0.1, 10.0):
            y = dl.best_response_y_smoothed(x, beta, np.array([0.2]))
            expected = np.clip(0.2 + dl.constraint_slope(x) / beta, 0.0, dl.B)
            assert y[0] == pytest.approx(expected)


# ---------------------------------------------------------------- robust classification


class TestRobustClassification:
    def test_zero_theta(self, rc):
        x, y = rc.initial_point()
        np.testing.assert_allclose(rc.losses(x), np.log(2.0))
        assert rc.value(x, y) == pytest.approx(np.log(2.0) / rc.n, rel=1e-14)

    def test_lipschitz_example(self):
        Lxx, Lyx, Lyy, mu = lipschitz_rc(np.array([[1.0, 0.0]]), 2, 3.0, 1)
        assert Lxx == pytest.approx(0.5) and Lyy == pytest.approx(np.sqrt(2) * 3.0) and mu == 3.0

    def test_score_matrix_norm(self, rc):
        """||A_i||_F^2 = k(k-1)||a_i||^2: compare the score map against a one-hot build."""
        i = 4
        a = rc.features[i]
        k = rc.k
        Ai = np.tile(a[:, None], (1, k))
        Ai[:, rc.labels[i] - 1] = -(k - 1) * a
        assert np.sum(Ai**2) == pytest.approx(k * (k - 1) * np.sum(a**2))
        Theta = make_rng(0).standard_normal((k, rc.d))
        assert rc.scores(Theta.ravel())[i] == pytest.approx(np.trace(Theta @ Ai))

    def test_metadata(self, rc):
        meta = rc.metadata()
        assert meta["lambda"] == pytest.approx(rc.lambda_prime / (2 * rc.n**2))
        assert rc.mu == rc.lambda_prime

    def test_sparse_matches_dense(self, rc):
        sparse = robust_classification((sp.csr_matrix(rc.features), rc.labels), k=3)
        x, y = rc.x_set.sample(make_rng(6), 1)[0], rc.y_set.sample(make_rng(7), 1)[0]
        np.testing.assert_allclose(sparse.grad_x(x, y), rc.grad_x(x, y), rtol=1e-12, atol=1e-15)

    def test_ball_dual_set(self, rc):
        ball = robust_classification((rc.features, rc.labels), k=3, dual_set="ball", rho=0.5)
        x = ball.x_set.sample(make_rng(1), 1)[0]
        y = ball.best_response_y(x)
        assert ball.y_set.contains(y)
        assert fd_relative_error(ball, x, y) <= 1e-5

    def test_empty(self):
        with pytest.raises(ArgumentError):
            robust_classification((np.zeros((0, 3)), np.zeros(0, dtype=int)), k=2)


# ---------------------------------------------------------------- file formats


class TestLibsvm:
    def test_parse(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("2 1:0.5 3:1.0\n1\n", encoding="utf-8")
        s = read_libsvm(path)
        assert s.label_names == ["2", "1"] and list(s.labels) == [1, 2]
        assert s.d == 3 and s.n == 2 and s.k == 2
        np.testing.assert_array_equal(s.features.toarray(), [[0.5, 0.0, 1.0], [0.0, 0.0, 0.0]])

    @pytest.mark.parametrize("line", ["1 3:1 2:1", "1 2:1 2:3", "1 0:1", "1 x:1", "1 2-1", "1 2:abc"])
    def test_errors(self, tmp_path, line):
        path = tmp_path / "bad.txt"
        path.write_text("1 1:1\n" + line + "\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 2"):
            read_libsvm(path)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_round_trip(self, tmp_path_factory, seed):
        g = make_rng(seed)
        F = sp.random(6, 5, density=0.4, random_state=seed, format="csr") * g.normal()
        s = Samples(sp.csr_matrix(F), g.integers(1, 4, 6), ["a", "b", "c"])
        path = tmp_path_factory.mktemp("rt") / "s.txt"
        write_libsvm(path, s)
        back = read_libsvm(path)
        assert (back.features != s.features[:, : back.d]).nnz == 0
        assert [s.label_names[i - 1] for i in s.labels] == [back.label_names[i - 1]
                                                             for i in back.labels]


class TestMatrixFiles:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), m=st.integers(1, 6), n=st.integers(1, 6))
    def test_round_trips(self, tmp_path_factory, seed, m, n):
        M = make_rng(seed).standard_normal((m, n)) * 10.0 ** make_rng(seed + 1).integers(-300, 300)
        d = tmp_path_factory.mktemp("mat")
        write_mmx(d / "m.mmx", M)
        write_matrix_csv(d / "m.csv", M)
        assert read_mmx(d / "m.mmx").tobytes() == M.tobytes()
        assert read_matrix_csv(d / "m.csv").tobytes() == M.tobytes()

    def test_mmx_layout(self, tmp_path):
        write_mmx(tmp_path / "a.mmx", np.array([[1.0, 2.0]]))
        raw = (tmp_path / "a.mmx").read_bytes()
        assert raw[:4] == b"MMX1" and int.from_bytes(raw[4:12], "little") == 1
        assert int.from_bytes(raw[12:20], "little") == 2 and len(raw) == 20 + 16

    def test_bad_files(self, tmp_path):
        (tmp_path / "x.mmx").write_bytes(b"NOPE" + bytes(16))
        with pytest.raises(ParseError):
            read_mmx(tmp_path / "x.mmx")
        (tmp_path / "x.csv").write_text("a,b\n", encoding="utf-8")
        with pytest.raises(ParseError):
            read_matrix_csv(tmp_path / "x.csv")
