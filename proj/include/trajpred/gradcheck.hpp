#pragma once

#include <cmath>
#include <string>
#include <type_traits>

#include "trajpred/graph.hpp"
#include "trajpred/params.hpp"
#include "trajpred/rng.hpp"

namespace trajpred {

struct GradCheckOptions {
    double step = 1e-5;
    std::size_t max_rejects = 10000;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t probes = 0;
    std::size_t rejected = 0;
    std::string worst_param;
    std::size_t worst_offset = 0;
};

/// Central finite differences against the tape's analytic gradients on
/// randomly probed parameter coordinates.
///
/// `build` must construct the scalar loss on a fresh Graph from the current
/// parameter values, deterministically: two evaluations at the same point
/// must agree bit-for-bit, otherwise a DeterminismError is thrown. Probes
/// whose +/- step evaluations produce different relu activation patterns
/// straddle a kink and are rejected rather than scored.
///
/// Only meaningful in check-mode precision, hence the double requirement.
template <typename T, typename BuildFn>
GradCheckReport gradient_check(BuildFn&& build, ParamRegistry<T>& params,
                               std::size_t probe_count, Rng& rng,
                               GradCheckOptions opts = {}) {
    static_assert(std::is_same_v<T, double>,
                  "gradient_check requires check-mode (double) precision");
    if (params.flat_size() == 0) throw ContractError("gradient_check: no parameters");

    const auto eval = [&](Graph<T>& g) -> double {
        Value<T> root = build(g);
        if (root.value().size() != 1) {
            throw ContractError("gradient_check: closure must be scalar-valued");
        }
        return static_cast<double>(root.value()[0]);
    };

    // Analytic gradients at the base point.
    params.zero_grad();
    Graph<T> g0;
    Value<T> root = build(g0);
    if (root.value().size() != 1) {
        throw ContractError("gradient_check: closure must be scalar-valued");
    }
    const double f0 = static_cast<double>(root.value()[0]);
    g0.backward(root);

    {
        Graph<T> g1;
        const double f1 = eval(g1);
        if (f0 != f1) {
            throw DeterminismError("gradient_check: closure returned " + std::to_string(f0) +
                                   " then " + std::to_string(f1) + " at the same point");
        }
    }

    GradCheckReport report;
    const double h = opts.step;
    std::size_t rejects_left = opts.max_rejects;
    while (report.probes < probe_count) {
        const std::size_t flat = rng.index(params.flat_size());
        const T x0 = params.flat_value(flat);

        params.set_flat_value(flat, x0 + static_cast<T>(h));
        Graph<T> gp;
        const double fp = eval(gp);
        params.set_flat_value(flat, x0 - static_cast<T>(h));
        Graph<T> gm;
        const double fm = eval(gm);
        params.set_flat_value(flat, x0);

        if (gp.relu_pattern() != gm.relu_pattern()) {
            ++report.rejected;
            if (rejects_left-- == 0) {
                throw ContractError("gradient_check: probe rejection budget exhausted");
            }
            continue;
        }

        const double numeric = (fp - fm) / (2.0 * h);
        const double analytic = static_cast<double>(params.flat_grad(flat));
        const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            auto [b, o] = params.locate(flat);
            report.worst_param = params.block(b).name;
            report.worst_offset = o;
        }
        ++report.probes;
    }
    return report;
}

} // namespace trajpred
