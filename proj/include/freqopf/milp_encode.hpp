#pragma once

// Exact Big-M mixed-integer linear encoding of a trained ReLU network with
// per-neuron interval bound propagation and stable-neuron elimination.

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lp_solver.hpp"
#include "neural.hpp"

namespace freqopf {

struct EncodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NeuronBounds {
    double lo = 0, hi = 0;
};

// Pre-activation interval bounds per layer, by interval arithmetic.
// Input bounds must be finite; params are expected normalization-folded
// (raw units) when used for OPF embedding.
inline std::vector<std::vector<NeuronBounds>> propagate_bounds(
    const MlpParams& p, const std::vector<NeuronBounds>& input_bounds) {
    if (static_cast<int>(input_bounds.size()) != p.weights.front().rows)
        throw EncodeError("propagate_bounds: input bound count mismatch");
    for (const auto& b : input_bounds)
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
            throw EncodeError("propagate_bounds: invalid input interval");

    std::vector<std::vector<NeuronBounds>> out;
    std::vector<NeuronBounds> act = input_bounds;
    for (int m = 0; m < p.n_layers(); ++m) {
        const Matrix& w = p.weights[m];
        std::vector<NeuronBounds> z(w.cols);
        for (int j = 0; j < w.cols; ++j) {
            if (!std::isfinite(p.biases[m][j])) throw EncodeError("non-finite bias");
            double lo = p.biases[m][j], hi = lo;
            for (int i = 0; i < w.rows; ++i) {
                double c = w(i, j);
                if (!std::isfinite(c)) throw EncodeError("non-finite weight");
                if (c >= 0) {
                    lo += c * act[i].lo;
                    hi += c * act[i].hi;
                } else {
                    lo += c * act[i].hi;
                    hi += c * act[i].lo;
                }
            }
            z[j] = {lo, hi};
        }
        out.push_back(z);
        if (m + 1 < p.n_layers()) {
            act.resize(z.size());
            for (std::size_t j = 0; j < z.size(); ++j)
                act[j] = {std::max(z[j].lo, 0.0), std::max(z[j].hi, 0.0)};
        }
    }
    return out;
}

struct VarRef {
    bool external = false;
    int id = -1;
};

struct BlockVar {
    std::string name;
    double lb = 0, ub = 0;
    bool binary = false;
};

struct BlockRow {
    std::vector<std::pair<VarRef, double>> coeffs;
    lp::Sense sense = lp::Sense::EQ;
    double rhs = 0;
};

struct EncodeStats {
    int binaries = 0;
    int stable_active = 0;
    int stable_inactive = 0;
    int total_hidden = 0;
};

struct ConstraintBlock {
    std::vector<BlockVar> vars;
    std::vector<BlockRow> rows;
    VarRef rocof_var, fn_var;  // local refs into vars
    EncodeStats stats;
    // (layer, neuron) -> local binary var id, for unstable neurons only
    std::vector<std::tuple<int, int, int>> neuron_binaries;

    VarRef add_var(std::string name, double lb, double ub, bool binary = false) {
        vars.push_back({std::move(name), lb, ub, binary});
        return {false, static_cast<int>(vars.size()) - 1};
    }

    // Materializes the block into a MILP; returns local-id -> global-id map.
    std::vector<int> append_to(lp::MilpProblem& mp) const {
        std::vector<int> map(vars.size());
        for (std::size_t i = 0; i < vars.size(); ++i) {
            map[i] = mp.lp.add_var(vars[i].name, vars[i].lb, vars[i].ub, 0.0);
            if (vars[i].binary) mp.binaries.push_back(map[i]);
        }
        for (const auto& r : rows) {
            std::vector<std::pair<int, double>> coeffs;
            for (const auto& [ref, c] : r.coeffs)
                coeffs.emplace_back(ref.external ? ref.id : map[ref.id], c);
            mp.lp.add_row(std::move(coeffs), r.sense, r.rhs);
        }
        return map;
    }
};

// Tolerance below which a neuron counts as stably active/inactive.
constexpr double kStableTol = 1e-9;

enum class ReluKind { Unstable, StableActive, StableInactive };

struct ReluResult {
    ReluKind kind = ReluKind::Unstable;
    VarRef a;    // activation variable (Unstable) or the z var itself (StableActive)
    VarRef bin;  // the binary, when one was emitted
};

// Appends the Big-M rows for a = max(z, 0) given pre-activation bounds.
// Stable neurons produce no binary: active collapses to a = z, inactive to
// a = 0 (the caller simply drops the term).
inline ReluResult encode_relu(ConstraintBlock& blk, VarRef z_var, NeuronBounds b,
                              const std::string& name) {
    if (b.lo > b.hi) throw EncodeError("encode_relu: inverted bounds for " + name);
    if (b.lo >= -kStableTol) return {ReluKind::StableActive, z_var};
    if (b.hi <= kStableTol) return {ReluKind::StableInactive, {}};

    VarRef a = blk.add_var(name + "_a", 0.0, b.hi);
    VarRef bin = blk.add_var(name + "_B", 0.0, 1.0, true);
    // a <= z - lo(1 - B)
    blk.rows.push_back({{{a, 1.0}, {z_var, -1.0}, {bin, -b.lo}}, lp::Sense::LE, -b.lo});
    // a >= z
    blk.rows.push_back({{{a, 1.0}, {z_var, -1.0}}, lp::Sense::GE, 0.0});
    // a <= hi * B   (a >= 0 via the variable bound)
    blk.rows.push_back({{{a, 1.0}, {bin, -b.hi}}, lp::Sense::LE, 0.0});
    ++blk.stats.binaries;
    return {ReluKind::Unstable, a, bin};
}

// A feature is either a host-problem variable or a fixed constant.
using Feature = std::variant<int, double>;  // external var id | constant

inline ConstraintBlock encode_network(const MlpParams& raw,
                                      const std::vector<Feature>& features,
                                      const std::vector<NeuronBounds>& input_bounds,
                                      const std::string& prefix = "nn") {
    raw.check_chain(raw.weights.front().rows);
    if (static_cast<int>(features.size()) != raw.weights.front().rows)
        throw EncodeError("encode_network: unmapped feature (count mismatch)");
    auto bounds = propagate_bounds(raw, input_bounds);

    ConstraintBlock blk;
    // previous layer terms: coefficient target per neuron (or dropped)
    struct Term {
        bool present = false;
        VarRef ref;
    };
    std::vector<Term> prev;  // for layer m >= 2

    for (int m = 0; m < raw.n_layers(); ++m) {
        const Matrix& w = raw.weights[m];
        std::vector<Term> cur(w.cols);
        bool last = (m + 1 == raw.n_layers());
        for (int j = 0; j < w.cols; ++j) {
            const NeuronBounds zb = bounds[m][j];
            std::string zname =
                prefix + "_z" + std::to_string(m + 1) + "_" + std::to_string(j);
            VarRef z = blk.add_var(zname, zb.lo, zb.hi);
            BlockRow row;
            row.sense = lp::Sense::EQ;
            row.rhs = raw.biases[m][j];
            row.coeffs.emplace_back(z, 1.0);
            if (m == 0) {
                for (int i = 0; i < w.rows; ++i) {
                    double c = w(i, j);
                    if (c == 0.0) continue;
                    if (std::holds_alternative<int>(features[i]))
                        row.coeffs.emplace_back(VarRef{true, std::get<int>(features[i])}, -c);
                    else
                        row.rhs += c * std::get<double>(features[i]);
                }
            } else {
                for (int i = 0; i < w.rows; ++i) {
                    double c = w(i, j);
                    if (c == 0.0 || !prev[i].present) continue;
                    row.coeffs.emplace_back(prev[i].ref, -c);
                }
            }
            blk.rows.push_back(std::move(row));

            if (last) {
                cur[j] = {true, z};
            } else {
                ++blk.stats.total_hidden;
                ReluResult rr = encode_relu(blk, z, zb, zname);
                switch (rr.kind) {
                    case ReluKind::Unstable:
                        cur[j] = {true, rr.a};
                        blk.neuron_binaries.emplace_back(m + 1, j, rr.bin.id);
                        break;
                    case ReluKind::StableActive:
                        ++blk.stats.stable_active;
                        cur[j] = {true, z};
                        break;
                    case ReluKind::StableInactive:
                        ++blk.stats.stable_inactive;
                        cur[j] = {false, {}};
                        break;
                }
            }
        }
        prev = std::move(cur);
    }
    if (prev.size() != 2) throw EncodeError("encode_network: expected 2 outputs");
    blk.rocof_var = prev[0].ref;
    blk.fn_var = prev[1].ref;
    return blk;
}

// Output security limits: RoCoF >= r_lmt, FN >= f_lmt. Infinite limits are
// omitted. FN uses >= (a floor): the usage in the source formulation treats
// f_lmt as a lower operational limit.
inline void output_limits(ConstraintBlock& blk, double r_lmt, double f_lmt) {
    if (blk.rocof_var.id < 0 || blk.fn_var.id < 0)
        throw EncodeError("output_limits: block has no output variables");
    if (std::isfinite(r_lmt))
        blk.rows.push_back({{{blk.rocof_var, 1.0}}, lp::Sense::GE, r_lmt});
    if (std::isfinite(f_lmt))
        blk.rows.push_back({{{blk.fn_var, 1.0}}, lp::Sense::GE, f_lmt});
}

}  // namespace freqopf
