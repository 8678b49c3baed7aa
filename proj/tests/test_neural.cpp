#include <catch2/catch_amalgamated.hpp>

#include <freqopf/neural.hpp>

#include "support.hpp"

using namespace freqopf;

namespace {

MlpParams random_net(const MlpSpec& spec, std::uint64_t seed) {
    MlpParams p = init_params(spec, seed);
    Rng rng(seed ^ 0x1111);
    for (auto& b : p.biases)
        for (auto& v : b) v = rng.uniform(-0.5, 0.5);
    return p;
}

std::vector<double> random_x(int dim, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.uniform(lo, hi);
    return x;
}

}  // namespace

TEST_CASE("forward pass basics") {
    SECTION("all-zero weights return the output bias") {
        MlpSpec spec{3, {4}, 2};
        MlpParams p = init_params(spec, 1);
        for (auto& w : p.weights) std::fill(w.a.begin(), w.a.end(), 0.0);
        p.biases.back() = {-0.25, 59.75};
        auto y = forward(p, {1.0, 2.0, 3.0});
        CHECK(y == std::vector<double>{-0.25, 59.75});
    }
    SECTION("single chain net clips negative pre-activations") {
        // 1 -> 1 hidden -> 2 outputs, all unit weights, zero biases
        MlpParams p;
        p.weights.emplace_back(1, 1);
        p.weights[0](0, 0) = 1.0;
        p.biases.push_back({0.0});
        p.weights.emplace_back(1, 2);
        p.weights[1](0, 0) = 1.0;
        p.weights[1](0, 1) = 1.0;
        p.biases.push_back({0.0, 0.0});
        CHECK(forward(p, {-2.0}) == std::vector<double>{0.0, 0.0});
        CHECK(forward(p, {3.0}) == std::vector<double>{3.0, 3.0});
    }
    SECTION("dimension mismatches are rejected") {
        MlpSpec spec{3, {4}, 2};
        MlpParams p = init_params(spec, 1);
        CHECK_THROWS_AS(forward(p, {1.0, 2.0}), NeuralError);
        CHECK_THROWS_AS(forward(MlpParams{}, {1.0}), NeuralError);
    }
    SECTION("pre-activations are recorded per layer") {
        MlpSpec spec{2, {3, 3}, 2};
        MlpParams p = random_net(spec, 5);
        std::vector<std::vector<double>> pre;
        forward(p, {0.5, -0.5}, &pre);
        REQUIRE(pre.size() == 3);
        CHECK(pre[0].size() == 3);
        CHECK(pre[2].size() == 2);
    }
}

TEST_CASE("forward matches an independent re-implementation to 1e-12") {
    Rng rng(42);
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        MlpSpec spec{5, {7, 6}, 2};
        MlpParams p = random_net(spec, seed);
        for (int t = 0; t < 20; ++t) {
            auto x = random_x(5, rng);
            auto a = forward(p, x);
            auto b = testsup::oracle_forward(p, x);
            CHECK_THAT(a[0], Catch::Matchers::WithinAbs(b[0], 1e-12));
            CHECK_THAT(a[1], Catch::Matchers::WithinAbs(b[1], 1e-12));
        }
    }
}

TEST_CASE("forward is piecewise linear along random directions") {
    MlpSpec spec{4, {8, 8}, 2};
    MlpParams p = random_net(spec, 3);
    Rng rng(77);
    auto x = random_x(4, rng);
    auto d = random_x(4, rng, -1.0, 1.0);
    // tiny steps stay inside one activation region; the directional
    // difference quotient must be exactly constant there
    double h = 1e-7;
    auto at = [&](double t) {
        std::vector<double> q(4);
        for (int i = 0; i < 4; ++i) q[i] = x[i] + t * d[i];
        return forward(p, q);
    };
    auto y0 = at(0), y1 = at(h), y2 = at(2 * h);
    for (int o = 0; o < 2; ++o) {
        double g1 = (y1[o] - y0[o]) / h;
        double g2 = (y2[o] - y1[o]) / h;
        CHECK_THAT(g1, Catch::Matchers::WithinAbs(g2, 1e-5));
    }
}

TEST_CASE("hidden-neuron permutation leaves the output unchanged") {
    MlpSpec spec{3, {5}, 2};
    MlpParams p = random_net(spec, 9);
    MlpParams q = p;
    // swap hidden neurons 1 and 3: columns of W1/b1, rows of W2
    for (int i = 0; i < 3; ++i) std::swap(q.weights[0](i, 1), q.weights[0](i, 3));
    std::swap(q.biases[0][1], q.biases[0][3]);
    for (int j = 0; j < 2; ++j) std::swap(q.weights[1](1, j), q.weights[1](3, j));
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
        auto x = random_x(3, rng);
        auto a = forward(p, x), b = forward(q, x);
        CHECK_THAT(a[0], Catch::Matchers::WithinAbs(b[0], 1e-12));
        CHECK_THAT(a[1], Catch::Matchers::WithinAbs(b[1], 1e-12));
    }
}

TEST_CASE("loss follows the mean-over-rows, sum-over-outputs convention") {
    MlpSpec spec{2, {}, 2};  // purely linear single layer
    MlpParams p = init_params(spec, 1);
    std::fill(p.weights[0].a.begin(), p.weights[0].a.end(), 0.0);
    p.biases[0] = {1.0, 2.0};

    ScenarioRow r;
    r.x = {0.0, 0.0};
    r.rocof = 0.0;  // error 1
    r.fn = 1.0;     // error 1
    CHECK_THAT(loss(p, {r}), Catch::Matchers::WithinRel(2.0, 1e-12));

    SECTION("exact predictions give zero loss") {
        r.rocof = 1.0;
        r.fn = 2.0;
        CHECK(loss(p, {r}) == 0.0);
    }
    SECTION("duplicating rows leaves the mean unchanged") {
        double one = loss(p, {r});
        CHECK_THAT(loss(p, {r, r, r}), Catch::Matchers::WithinRel(one, 1e-12));
    }
    SECTION("empty slice rejected") { CHECK_THROWS_AS(loss(p, {}), NeuralError); }
}

TEST_CASE("backprop gradient matches central finite differences") {
    Rng rng(5);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        MlpSpec spec{3, {5, 4}, 2};
        MlpParams p = random_net(spec, seed);
        std::vector<ScenarioRow> slice;
        for (int t = 0; t < 6; ++t) {
            ScenarioRow r;
            r.x = random_x(3, rng);
            r.rocof = rng.uniform(-1.0, 0.0);
            r.fn = rng.uniform(-1.0, 1.0);
            slice.push_back(r);
        }
        MlpParams g = grad(p, slice);
        MlpParams fd = testsup::fd_grad(p, slice);
        double scale = 0;
        for (int m = 0; m < p.n_layers(); ++m)
            for (double v : fd.weights[m].a) scale = std::max(scale, std::abs(v));
        for (int m = 0; m < p.n_layers(); ++m) {
            for (std::size_t k = 0; k < g.weights[m].a.size(); ++k)
                CHECK_THAT(g.weights[m].a[k],
                           Catch::Matchers::WithinAbs(fd.weights[m].a[k], 1e-5 * scale));
            for (std::size_t k = 0; k < g.biases[m].size(); ++k)
                CHECK_THAT(g.biases[m][k],
                           Catch::Matchers::WithinAbs(fd.biases[m][k], 1e-5 * scale));
        }
    }
}

TEST_CASE("gradient is zero at a perfect fit") {
    MlpSpec spec{2, {}, 2};
    MlpParams p = init_params(spec, 3);
    ScenarioRow r;
    r.x = {0.3, -0.7};
    auto y = forward(p, r.x);
    r.rocof = y[0];
    r.fn = y[1];
    MlpParams g = grad(p, {r});
    for (double v : g.weights[0].a) CHECK(std::abs(v) < 1e-14);
    for (double v : g.biases[0]) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("error scaling scales the gradient linearly for a linear net") {
    MlpSpec spec{2, {}, 2};
    MlpParams p = init_params(spec, 3);
    ScenarioRow r;
    r.x = {0.5, 0.5};
    auto y = forward(p, r.x);
    ScenarioRow r1 = r, r3 = r;
    r1.rocof = y[0] - 1.0;
    r1.fn = y[1] - 1.0;
    r3.rocof = y[0] - 3.0;
    r3.fn = y[1] - 3.0;
    MlpParams g1 = grad(p, {r1});
    MlpParams g3 = grad(p, {r3});
    for (std::size_t k = 0; k < g1.weights[0].a.size(); ++k)
        CHECK_THAT(g3.weights[0].a[k],
                   Catch::Matchers::WithinRel(3.0 * g1.weights[0].a[k], 1e-9));
}

namespace {

// Rows drawn from a planted linear map so a small net can fit it exactly.
ScenarioDataset planted_linear(int n, std::uint64_t seed) {
    ScenarioDataset ds;
    ds.feature_names = {"f0", "f1", "f2"};
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        ScenarioRow r;
        r.x = {rng.uniform(0.0, 100.0), rng.uniform(0.0, 50.0), rng.uniform(0.0, 10.0)};
        r.rocof = -0.002 * r.x[0] - 0.004 * r.x[1] + 0.01 * r.x[2] - 0.1;
        r.fn = 59.9 - 0.003 * r.x[0] + 0.001 * r.x[1];
        r.split = i % 10 < 7 ? "train" : (i % 10 < 9 ? "val" : "test");
        ds.rows.push_back(std::move(r));
    }
    return ds;
}

}  // namespace

TEST_CASE("training recovers a planted linear relationship") {
    ScenarioDataset ds = planted_linear(400, 21);
    MlpSpec spec{3, {8}, 2};
    TrainConfig cfg;
    cfg.seed = 2;
    TrainResult res = train(spec, ds, cfg);

    // R^2 on the validation split, raw units
    auto idx = ds.split_indices("val");
    double mean0 = 0, mean1 = 0;
    for (auto i : idx) {
        mean0 += ds.rows[i].rocof;
        mean1 += ds.rows[i].fn;
    }
    mean0 /= idx.size();
    mean1 /= idx.size();
    double ss0 = 0, ss1 = 0, se0 = 0, se1 = 0;
    for (auto i : idx) {
        auto y = predict_raw(res.params, res.normalizer, ds.rows[i].x);
        se0 += (y[0] - ds.rows[i].rocof) * (y[0] - ds.rows[i].rocof);
        se1 += (y[1] - ds.rows[i].fn) * (y[1] - ds.rows[i].fn);
        ss0 += (ds.rows[i].rocof - mean0) * (ds.rows[i].rocof - mean0);
        ss1 += (ds.rows[i].fn - mean1) * (ds.rows[i].fn - mean1);
    }
    CHECK(1.0 - se0 / ss0 >= 0.995);
    CHECK(1.0 - se1 / ss1 >= 0.995);

    // best-validation contract
    double best = 1e300;
    for (const auto& e : res.history) best = std::min(best, e.val_loss);
    CHECK_THAT(res.best_val_loss, Catch::Matchers::WithinRel(best, 1e-12));
}

TEST_CASE("training is deterministic under a fixed seed") {
    ScenarioDataset ds = planted_linear(250, 33);
    MlpSpec spec{3, {6}, 2};
    TrainConfig cfg;
    cfg.seed = 4;
    cfg.max_epochs = 40;
    cfg.patience = 40;
    TrainResult a = train(spec, ds, cfg);
    TrainResult b = train(spec, ds, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_loss == b.history[i].val_loss);
    }
    for (int m = 0; m < a.params.n_layers(); ++m)
        CHECK(a.params.weights[m].a == b.params.weights[m].a);
}

TEST_CASE("training input validation") {
    ScenarioDataset small = planted_linear(100, 1);
    MlpSpec spec{3, {4}, 2};
    CHECK_THROWS_AS(train(spec, small), NeuralError);  // < 200 rows

    ScenarioDataset no_val = planted_linear(300, 1);
    for (auto& r : no_val.rows) r.split = "train";
    CHECK_THROWS_AS(train(spec, no_val), NeuralError);
}

TEST_CASE("fold_normalization reproduces the normalized pipeline") {
    MlpSpec spec{4, {6, 5}, 2};
    MlpParams p = random_net(spec, 13);
    Normalizer nm;
    Rng rng(14);
    for (int f = 0; f < 4; ++f) {
        nm.input_shift.push_back(rng.uniform(-10.0, 10.0));
        nm.input_scale.push_back(rng.uniform(0.5, 20.0));
    }
    for (int o = 0; o < 2; ++o) {
        nm.output_shift.push_back(rng.uniform(-1.0, 60.0));
        nm.output_scale.push_back(rng.uniform(0.1, 3.0));
    }
    MlpParams folded = fold_normalization(p, nm);

    SECTION("forward(folded, raw) equals denormalized forward(normalized)") {
        for (int t = 0; t < 100; ++t) {
            auto x_raw = random_x(4, rng, -20.0, 20.0);
            auto direct = forward(folded, x_raw);
            auto via = predict_raw(p, nm, x_raw);
            CHECK_THAT(direct[0], Catch::Matchers::WithinAbs(via[0], 1e-9));
            CHECK_THAT(direct[1], Catch::Matchers::WithinAbs(via[1], 1e-9));
        }
    }
    SECTION("activation patterns are preserved") {
        for (int t = 0; t < 50; ++t) {
            auto x_raw = random_x(4, rng, -20.0, 20.0);
            std::vector<double> xn(4);
            for (int f = 0; f < 4; ++f)
                xn[f] = (x_raw[f] - nm.input_shift[f]) / nm.input_scale[f];
            std::vector<std::vector<double>> pre_n, pre_f;
            forward(p, xn, &pre_n);
            forward(folded, x_raw, &pre_f);
            for (std::size_t m = 0; m + 1 < pre_n.size(); ++m)
                for (std::size_t j = 0; j < pre_n[m].size(); ++j)
                    CHECK((pre_n[m][j] > 0) == (pre_f[m][j] > 0));
        }
    }
    SECTION("identity normalizer changes nothing") {
        Normalizer id = Normalizer::identity(4, 2);
        MlpParams same = fold_normalization(p, id);
        for (int m = 0; m < p.n_layers(); ++m) {
            CHECK(same.weights[m].a == p.weights[m].a);
            CHECK(same.biases[m] == p.biases[m]);
        }
    }
    SECTION("shift-only normalizer touches only the first and last biases") {
        Normalizer sh = Normalizer::identity(4, 2);
        sh.input_shift = {1.0, -2.0, 0.5, 3.0};
        sh.output_shift = {0.25, -1.5};
        MlpParams f2 = fold_normalization(p, sh);
        for (int m = 0; m < p.n_layers(); ++m) CHECK(f2.weights[m].a == p.weights[m].a);
        CHECK(f2.biases[0] != p.biases[0]);
        CHECK(f2.biases.back() != p.biases.back());
        for (int m = 1; m + 1 < p.n_layers(); ++m) CHECK(f2.biases[m] == p.biases[m]);
    }
    SECTION("non-positive scales are rejected") {
        Normalizer bad = nm;
        bad.input_scale[0] = 0.0;
        CHECK_THROWS_AS(fold_normalization(p, bad), NeuralError);
        bad = nm;
        bad.output_scale[1] = -1.0;
        CHECK_THROWS_AS(fold_normalization(p, bad), NeuralError);
    }
}

TEST_CASE("model JSON round-trips weights, normalizer and metadata") {
    Model m;
    m.spec = {4, {6, 5}, 2};
    m.params = random_net(m.spec, 55);
    m.normalizer = Normalizer::identity(4, 2);
    m.normalizer.input_shift[2] = 3.25;
    m.metadata = {{"seed", 55}, {"note", "round-trip"}};
    Model back = model_from_json(model_to_json(m));
    CHECK(back.spec.input_dim == m.spec.input_dim);
    CHECK(back.spec.hidden == m.spec.hidden);
    for (int l = 0; l < m.params.n_layers(); ++l) {
        CHECK(back.params.weights[l].a == m.params.weights[l].a);
        CHECK(back.params.biases[l] == m.params.biases[l]);
    }
    CHECK(back.normalizer.input_shift == m.normalizer.input_shift);
    CHECK(back.metadata.at("seed") == 55);
}
