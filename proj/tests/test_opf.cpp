#include <catch2/catch_amalgamated.hpp>

#include <freqopf/opf.hpp>

#include "support.hpp"

using namespace freqopf;

namespace {

json small_case_json() {
    json gov = {{"t1", 0.1}, {"t2", 0.0},  {"t3", 0.2}, {"t4", 0.1},
                {"t5", 8.0}, {"f_hp", 0.3}, {"k", 1.0},  {"r", 0.05}};
    return json{
        {"f0", 60.0},
        {"p_base", 100.0},
        {"damping_d", 1.0},
        {"buses", {"a", "b"}},
        {"reference_bus", "a"},
        {"lines",
         {{{"id", "L1"},
           {"from_bus", "a"},
           {"to_bus", "b"},
           {"reactance_x", 0.1},
           {"thermal_limit", 200.0}}}},
        {"generators",
         {{{"id", "G1"},
           {"bus", "a"},
           {"p_min", 0.0},
           {"p_max", 80.0},
           {"c2", 0.1},
           {"c1", 40.0},
           {"c0", 5.0},
           {"inertia_h", 4.0},
           {"mva_base", 90.0},
           {"governor", gov}},
          {{"id", "G2"},
           {"bus", "b"},
           {"p_min", 0.0},
           {"p_max", 120.0},
           {"c2", 0.05},
           {"c1", 10.0},
           {"c0", 2.0},
           {"inertia_h", 4.0},
           {"mva_base", 90.0},
           {"governor", gov}}}},
        {"loads", {{"a", 50.0}}},
        {"contingency_unit", "G1"}};
}

// A hand-built predictor over the 9-bus feature layout. Neurons 0/1 are
// stably active so the map is linear: rocof = -0.3 - 0.01 * P_G11,
// fn = 59.8. Neuron 2 (optional) straddles zero to exercise a binary.
Model hand_model(const PowerCase& c, bool with_unstable) {
    auto names = feature_names(c);
    int dim = static_cast<int>(names.size());
    int g11 = -1;
    for (int i = 0; i < dim; ++i)
        if (names[i] == "gen_G11") g11 = i;
    REQUIRE(g11 >= 0);

    Model m;
    int hidden = with_unstable ? 3 : 2;
    m.spec = {dim, {hidden}, 2};
    m.params.weights.emplace_back(dim, hidden);
    m.params.biases.push_back(std::vector<double>(hidden, 0.0));
    m.params.weights[0](g11, 0) = 0.01;
    m.params.biases[0][0] = 1.0;  // pre-activation in [1, 1.45]: stably on
    m.params.biases[0][1] = 1.0;
    if (with_unstable) {
        m.params.weights[0](g11, 2) = 0.02;
        m.params.biases[0][2] = -0.5;  // in [-0.5, 0.4]: straddles zero
    }
    m.params.weights.emplace_back(hidden, 2);
    m.params.weights[1](0, 0) = -1.0;
    m.params.biases.push_back({0.7, 59.8});
    if (with_unstable) m.params.weights[1](2, 0) = 0.01;
    m.normalizer = Normalizer::identity(dim, 2);
    return m;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("piecewise cost value accumulates segment by segment") {
    lp::PwlCost pw;
    pw.breakpoints = {0.0, 2.0, 4.0};
    pw.slopes = {2.0, 6.0};
    CHECK(pwl_value(pw, 1.0, 0.0) == 1.0);
    CHECK(pwl_value(pw, 1.0, 1.0) == 3.0);
    CHECK(pwl_value(pw, 1.0, 2.0) == 5.0);
    CHECK(pwl_value(pw, 1.0, 3.0) == 11.0);
    CHECK(pwl_value(pw, 1.0, 4.0) == 17.0);
}

TEST_CASE("feature layout: generators, loads, contingency one-hot") {
    PowerCase c = testsup::load_case("ieee9.json");
    auto names = feature_names(c);
    REQUIRE(names.size() == 9 + 3 + 9);
    CHECK(names[0] == "gen_G11");
    CHECK(names[9] == "load_5");
    CHECK(names[10] == "load_6");
    CHECK(names[11] == "load_8");
    CHECK(names[12] == "ctg_G11");

    std::map<std::string, double> disp;
    for (const auto& g : c.generators) disp[g.id] = 10.0;
    auto x = make_features(c, disp, "G21");
    REQUIRE(x.size() == names.size());
    CHECK(x[9] == 125.0);
    double onehot = 0;
    for (int i = 12; i < 21; ++i) onehot += x[i];
    CHECK(onehot == 1.0);
    CHECK(x[12 + 2] == 1.0);  // G21 is the third generator in case order

    disp.erase("G33");
    CHECK_THROWS_AS(make_features(c, disp, "G21"), OpfError);
}

TEST_CASE("economic dispatch puts the load on the cheap unit") {
    PowerCase c = case_from_json(small_case_json());
    OpfModel m = build_topf(c);
    DispatchSolution s = solve_variant(m);
    REQUIRE(s.status == lp::Status::Optimal);
    // G2 at 10 $/MWh vs G1 at 40: all 50 MW come from G2
    CHECK_THAT(s.dispatch_mw.at("G2"), Catch::Matchers::WithinAbs(50.0, 1e-7));
    CHECK_THAT(s.dispatch_mw.at("G1"), Catch::Matchers::WithinAbs(0.0, 1e-7));
    // cost within the PWL gap of the true quadratic, plus idle G1's constant
    double quad = 0.05 * 50 * 50 + 10.0 * 50 + 2.0 + 5.0;
    CHECK(s.cost >= quad - 1e-9);
    CHECK(s.cost <= quad + m.pwl[0].max_gap + m.pwl[1].max_gap + 1e-9);
    // the full load flows b -> a
    CHECK_THAT(s.flow_mw.at("L1"), Catch::Matchers::WithinAbs(-50.0, 1e-7));
    CHECK(s.angle_rad.at("a") == 0.0);
    CHECK(s.nodes <= 1);  // pure LP, no branching
}

TEST_CASE("a tight line caps imports from the cheap remote unit") {
    json j = small_case_json();
    j["loads"]["a"] = 100.0;
    j["lines"][0]["thermal_limit"] = 30.0;
    PowerCase c = case_from_json(j);
    DispatchSolution s = solve_variant(build_topf(c));
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK_THAT(s.dispatch_mw.at("G2"), Catch::Matchers::WithinAbs(30.0, 1e-7));
    CHECK_THAT(s.dispatch_mw.at("G1"), Catch::Matchers::WithinAbs(70.0, 1e-7));
    CHECK_THAT(std::abs(s.flow_mw.at("L1")), Catch::Matchers::WithinAbs(30.0, 1e-7));
    SolutionResiduals r = solution_residuals(c, s);
    CHECK(r.balance < 1e-7);
    CHECK(r.flow_excess < 1e-9);
    CHECK(r.p_excess < 1e-9);
}

TEST_CASE("9-bus base dispatch is feasible, clean and symmetric") {
    PowerCase c = testsup::load_case("ieee9.json");
    OpfModel m = build_topf(c);
    DispatchSolution s = solve_variant(m);
    REQUIRE(s.status == lp::Status::Optimal);

    SolutionResiduals r = solution_residuals(c, s);
    CHECK(r.balance < 1e-6);
    CHECK(r.flow_excess < 1e-7);
    CHECK(r.p_excess < 1e-7);

    double total = 0;
    for (const auto& [id, mw] : s.dispatch_mw) total += mw;
    CHECK_THAT(total, Catch::Matchers::WithinRel(c.total_load(), 1e-9));

    // identical units at the same bus split evenly under the tie-break
    for (std::size_t i = 0; i < c.generators.size(); ++i)
        for (std::size_t j = i + 1; j < c.generators.size(); ++j) {
            Generator a = c.generators[i], b = c.generators[j];
            if (a.bus != b.bus) continue;
            a.id = b.id = "";
            if (!(a == b)) continue;
            CHECK_THAT(s.dispatch_mw.at(c.generators[i].id),
                       Catch::Matchers::WithinAbs(
                           s.dispatch_mw.at(c.generators[j].id), 1e-6));
        }

    // reported cost re-derives from the dispatch through the same PWL curves
    double re = 0;
    for (std::size_t gi = 0; gi < c.generators.size(); ++gi)
        re += pwl_value(m.pwl[gi], m.cost_const[gi], s.dispatch_mw.at(c.generators[gi].id));
    CHECK_THAT(s.cost, Catch::Matchers::WithinRel(re, 1e-12));

    // cost grows with load
    DispatchSolution up = solve_variant(build_topf(scale_loads(c, 1.1)));
    REQUIRE(up.status == lp::Status::Optimal);
    CHECK(up.cost > s.cost);
}

TEST_CASE("linear frequency rows only restrict the dispatch") {
    PowerCase c = testsup::load_case("ieee9.json");
    DispatchSolution base = solve_variant(build_topf(c));

    SECTION("infinite limits reproduce the unconstrained dispatch") {
        DispatchSolution free = solve_variant(build_lfcopf(c, -kInf, -kInf));
        REQUIRE(free.status == lp::Status::Optimal);
        CHECK_THAT(free.cost, Catch::Matchers::WithinRel(base.cost, 1e-9));
        for (const auto& [id, mw] : base.dispatch_mw)
            CHECK_THAT(free.dispatch_mw.at(id),
                       Catch::Matchers::WithinAbs(mw, 1e-6));
    }
    SECTION("finite limits never reduce the cost") {
        DispatchSolution tight = solve_variant(build_lfcopf(c, -0.5, 59.5));
        REQUIRE(tight.status == lp::Status::Optimal);
        CHECK(tight.cost >= base.cost - 1e-9);
        REQUIRE(tight.pred_rocof.has_value());
        CHECK(*tight.pred_rocof >= -0.5 - 1e-9);
        CHECK(*tight.pred_fn >= 59.5 - 1e-9);
    }
    SECTION("a binding rate limit caps the designated unit exactly") {
        PowerCase cc = select_contingency(c, c.contingency_unit);
        double a = worst_rocof(cc, 1.0);
        double cap = 30.0;  // below G11's unconstrained 45 MW
        DispatchSolution s = solve_variant(build_lfcopf(c, a * cap, -kInf));
        REQUIRE(s.status == lp::Status::Optimal);
        CHECK_THAT(s.dispatch_mw.at("G11"), Catch::Matchers::WithinAbs(cap, 1e-6));
        CHECK_THAT(*s.pred_rocof, Catch::Matchers::WithinRel(a * cap, 1e-6));
    }
}

TEST_CASE("constant predictor embedding reduces to the base problem") {
    PowerCase c = testsup::load_case("ieee9.json");
    auto names = feature_names(c);
    Model zero;
    zero.spec = {static_cast<int>(names.size()), {4}, 2};
    zero.params = init_params(zero.spec, 1);
    for (auto& w : zero.params.weights) std::fill(w.a.begin(), w.a.end(), 0.0);
    zero.params.biases[0] = {1.0, 1.0, -1.0, -1.0};
    zero.params.biases[1] = {-0.3, 59.8};
    zero.normalizer = Normalizer::identity(zero.spec.input_dim, 2);

    DispatchSolution base = solve_variant(build_topf(c));
    DispatchSolution s = solve_variant(build_dnnfcopf(c, zero, -0.5, 59.5));
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK_THAT(s.cost, Catch::Matchers::WithinRel(base.cost, 1e-9));
    CHECK(*s.pred_rocof == -0.3);
    CHECK(*s.pred_fn == 59.8);

    // limits the constants cannot meet make the whole problem infeasible
    DispatchSolution bad = solve_variant(build_dnnfcopf(c, zero, -0.5, 60.5));
    CHECK(bad.status == lp::Status::Infeasible);
}

TEST_CASE("embedded predictor limit binds and matches the forward pass") {
    PowerCase c = testsup::load_case("ieee9.json");
    for (bool with_unstable : {false, true}) {
        Model hm = hand_model(c, with_unstable);
        // rocof = -0.3 - 0.01 * P_G11; -0.5 caps G11 (cheapest unit) at 20 MW
        OpfModel m = build_dnnfcopf(c, hm, -0.5, 59.5);
        CHECK((m.neuron_bin_global.empty()) == !with_unstable);
        DispatchSolution s = solve_variant(m);
        REQUIRE(s.status == lp::Status::Optimal);

        auto x = make_features(c, s.dispatch_mw, c.contingency_unit);
        auto y = forward(*m.folded, x);
        CHECK_THAT(*s.pred_rocof, Catch::Matchers::WithinAbs(y[0], 1e-12));
        CHECK(y[0] >= -0.5 - 1e-6);
        if (!with_unstable) {
            CHECK_THAT(s.dispatch_mw.at("G11"), Catch::Matchers::WithinAbs(20.0, 1e-6));
            CHECK_THAT(y[0], Catch::Matchers::WithinAbs(-0.5, 1e-6));
        }

        DispatchSolution base = solve_variant(build_topf(c));
        CHECK(s.cost >= base.cost - 1e-9);
    }
}

TEST_CASE("activation-pattern warm start does not change the optimum") {
    PowerCase c = testsup::load_case("ieee9.json");
    Model hm = hand_model(c, true);
    OpfModel m = build_dnnfcopf(c, hm, -0.5, 59.5);
    SolveConfig with, without;
    without.use_incumbent_hook = false;
    DispatchSolution a = solve_variant(m, with);
    DispatchSolution b = solve_variant(m, without);
    REQUIRE(a.status == lp::Status::Optimal);
    REQUIRE(b.status == lp::Status::Optimal);
    CHECK_THAT(a.cost, Catch::Matchers::WithinAbs(b.cost, 1e-6));
    CHECK(a.nodes <= b.nodes);
}

TEST_CASE("closed-loop verification reports relative prediction error") {
    PowerCase c = testsup::load_case("ieee9.json");
    DispatchSolution s = solve_variant(build_topf(c));
    REQUIRE(s.status == lp::Status::Optimal);

    s.pred_rocof.reset();
    s.pred_fn.reset();
    VerifyResult plain = verify_dispatch(c, s, 15.0);
    CHECK_FALSE(plain.err_rocof_pct.has_value());
    CHECK(plain.metrics.fn < c.f0);
    CHECK(plain.metrics.rocof_worst < 0);

    s.pred_rocof = plain.metrics.rocof_worst;
    s.pred_fn = plain.metrics.fn;
    VerifyResult exact = verify_dispatch(c, s, 15.0);
    CHECK_THAT(*exact.err_rocof_pct, Catch::Matchers::WithinAbs(0.0, 1e-9));
    CHECK_THAT(*exact.err_fn_pct, Catch::Matchers::WithinAbs(0.0, 1e-9));

    s.pred_rocof = plain.metrics.rocof_worst * 1.2;
    VerifyResult off = verify_dispatch(c, s, 15.0);
    CHECK_THAT(*off.err_rocof_pct, Catch::Matchers::WithinRel(20.0, 1e-6));
}
