#pragma once

// Brute-force solver for the chain-separation QP: try every subset of tight
// adjacent constraints, solve the equality-constrained problem through its KKT
// system, keep the feasible point of least objective.

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace taco::test {

struct QpSolution {
    std::vector<double> x;
    double objective = std::numeric_limits<double>::infinity();
};

/// minimize sum_t w_t (v_t - y_t)^2 subject to v_{t+1} - v_t >= gap_t.
inline QpSolution chain_qp_bruteforce(const std::vector<double>& y, const std::vector<double>& w,
                                      const std::vector<double>& gap) {
    const std::size_t n = y.size();
    if (w.size() != n || (n > 0 && gap.size() != n - 1)) {
        throw std::invalid_argument("chain_qp_bruteforce: size mismatch");
    }
    QpSolution best;
    if (n == 0) {
        best.objective = 0.0;
        return best;
    }
    const std::size_t c = n - 1;
    for (std::size_t mask = 0; mask < (std::size_t{1} << c); ++mask) {
        std::vector<std::size_t> tight;
        for (std::size_t t = 0; t < c; ++t) {
            if (mask & (std::size_t{1} << t)) tight.push_back(t);
        }
        const std::size_t k = tight.size();
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
        for (std::size_t t = 0; t < n; ++t) {
            K(t, t) = 2.0 * w[t];
            rhs(t) = 2.0 * w[t] * y[t];
        }
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t t = tight[r];
            K(n + r, t + 1) = 1.0;
            K(n + r, t) = -1.0;
            K(t + 1, n + r) = 1.0;
            K(t, n + r) = -1.0;
            rhs(n + r) = gap[t];
        }
        const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
        bool feasible = true;
        for (std::size_t t = 0; t < c; ++t) {
            if (sol(t + 1) - sol(t) < gap[t] - 1e-12) {
                feasible = false;
                break;
            }
        }
        if (!feasible) continue;
        double obj = 0.0;
        for (std::size_t t = 0; t < n; ++t) obj += w[t] * (sol(t) - y[t]) * (sol(t) - y[t]);
        if (obj < best.objective) {
            best.objective = obj;
            best.x.assign(sol.data(), sol.data() + n);
        }
    }
    return best;
}

/// The waypoint problem for one ordering, solved by brute force. Returns x indexed by agent.
inline QpSolution ordering_bruteforce(const std::vector<double>& eta,
                                      const std::vector<double>& urgency, double separation,
                                      const std::vector<std::size_t>& order) {
    const std::size_t n = eta.size();
    // Variables are x at positions: minimize sum k x^2, u_{t+1} - u_t >= D with u = e + x,
    // so x_{t+1} - x_t >= D - (e_{t+1} - e_t) and the targets are 0.
    std::vector<double> y(n, 0.0), w(n), gap(n ? n - 1 : 0);
    for (std::size_t t = 0; t < n; ++t) w[t] = urgency[order[t]];
    for (std::size_t t = 0; t + 1 < n; ++t) gap[t] = separation - (eta[order[t + 1]] - eta[order[t]]);
    auto pos = chain_qp_bruteforce(y, w, gap);
    QpSolution out;
    out.objective = pos.objective;
    out.x.assign(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) out.x[order[t]] = pos.x[t];
    return out;
}

}  // namespace taco::test
