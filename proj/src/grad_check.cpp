#include "lal/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace lal {

namespace {

std::vector<double> relu_inputs(const Graph& g) {
    std::vector<double> vals;
    for (size_t i = 0; i < g.size(); ++i) {
        const auto& n = g.node(i);
        if (std::strcmp(n.op, "relu") == 0)
            vals.insert(vals.end(), n.inputs[0]->data.begin(), n.inputs[0]->data.end());
    }
    return vals;
}

bool crosses_kink(const std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0 || b[i] == 0.0) return true;
        if ((a[i] > 0.0) != (b[i] > 0.0)) return true;
    }
    return false;
}

} // namespace

GradCheckReport grad_check(const std::function<TensorPtr(Graph&)>& build_loss,
                           const std::vector<TensorPtr>& params, double tolerance, double h) {
    // analytic pass
    std::vector<std::vector<double>> analytic;
    {
        Graph g;
        TensorPtr loss = build_loss(g);
        g.backward(loss);
        for (const auto& p : params) {
            p->ensure_grad();
            analytic.push_back(p->grad);
        }
    }

    GradCheckReport report;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        for (size_t e = 0; e < p->data.size(); ++e) {
            const double saved = p->data[e];

            p->data[e] = saved + h;
            Graph gp;
            const double fp = build_loss(gp)->data[0];
            const std::vector<double> rp = relu_inputs(gp);

            p->data[e] = saved - h;
            Graph gm;
            const double fm = build_loss(gm)->data[0];
            const std::vector<double> rm = relu_inputs(gm);

            p->data[e] = saved;

            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][e];
            const double err = std::fabs(a - numeric) /
                               std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            if (err > tolerance && crosses_kink(rp, rm)) {
                ++report.skipped;
                continue;
            }
            ++report.checked;
            report.max_rel_error = std::max(report.max_rel_error, err);
        }
    }
    return report;
}

} // namespace lal
