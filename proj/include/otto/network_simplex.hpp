#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "otto/errors.hpp"

namespace otto::lp {

struct FlowEntry {
    std::size_t source = 0;
    std::size_t target = 0;
    double mass = 0;
};

struct TransportSolution {
    std::vector<FlowEntry> flows;
    double cost = 0;
    std::size_t pivots = 0;
};

// Primal network simplex for the balanced transportation problem
//   min sum c(i, j) x_ij  s.t.  sum_j x_ij = a_i,  sum_i x_ij = b_j,  x >= 0
// on the complete bipartite graph.  Arcs are implicit (cost evaluated on demand), the
// spanning tree uses parent/thread/successor-count bookkeeping and the start basis is the
// northwest-corner staircase.  Pricing runs by blocks over a candidate list (the
// cheapest arcs of every source); when the list has no improving arc a full scan adds
// every violating arc, so termination certifies optimality over all arcs.
template <class CostFn>
class TransportSimplex {
public:
    TransportSimplex(std::vector<double> supply, std::vector<double> demand, CostFn cost,
                     std::size_t candidates_per_source = 16)
        : a_(std::move(supply)), b_(std::move(demand)), cost_(std::move(cost)), per_source_(candidates_per_source) {
        n_ = static_cast<std::int64_t>(a_.size());
        m_ = static_cast<std::int64_t>(b_.size());
        if (n_ == 0 || m_ == 0) throw invalid_argument("transport LP: empty marginal");
        double sa = 0, sb = 0;
        for (double v : a_) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw invalid_argument("transport LP: invalid supply");
            sa += v;
        }
        for (double v : b_) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw invalid_argument("transport LP: invalid demand");
            sb += v;
        }
        if (!(sa > 0.0) || std::abs(sa - sb) > 1e-9 * sa)
            throw invalid_argument("transport LP: infeasible, marginal masses differ");
        for (double& v : b_) v *= sa / sb;
        total_ = sa;
    }

    TransportSolution solve() {
        init_tree();
        init_candidates();
        const std::int64_t arcs = n_ * m_;
        const std::size_t limit = 200 * static_cast<std::size_t>(arcs) + 100000;
        std::size_t pivots = 0;
        for (;;) {
            if (!find_entering_candidate()) {
                // Refresh potentials from the tree to rule out drift, then scan every arc.
                compute_potentials();
                if (!full_scan()) break;
            }
            if (++pivots > limit) throw numerical_error("transport LP: pivot limit exceeded");
            find_join_node();
            find_leaving_arc();
            change_flow();
            update_tree_structure();
            update_potential();
            if (pivots % 4096 == 0) compute_potentials();
        }
        TransportSolution sol;
        sol.pivots = pivots;
        const std::int64_t nodes = n_ + m_;
        for (std::int64_t u = 0; u < nodes; ++u) {
            if (u == root_) continue;
            const double f = flow_[u];
            if (f < -1e-12 * total_) throw numerical_error("transport LP: negative flow in final basis");
            if (f <= 0.0) continue;
            const std::int64_t e = pred_[u];
            sol.flows.push_back({static_cast<std::size_t>(e / m_), static_cast<std::size_t>(e % m_), f});
            sol.cost += f * arc_cost(e);
        }
        std::sort(sol.flows.begin(), sol.flows.end(), [](const FlowEntry& x, const FlowEntry& y) {
            return x.source != y.source ? x.source < y.source : x.target < y.target;
        });
        return sol;
    }

private:
    static constexpr signed char kUp = 1, kDown = -1;

    std::vector<double> a_, b_;
    CostFn cost_;
    std::size_t per_source_ = 16;
    std::vector<std::int64_t> cand_;
    std::vector<double> cand_cost_;
    std::size_t next_cand_ = 0, cand_block_ = 1;
    std::int64_t n_ = 0, m_ = 0, root_ = 0;
    double total_ = 0, eps_ = 0;

    // Tree arrays indexed by node; sources 0..n-1, targets n..n+m-1.
    std::vector<std::int64_t> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, dirty_;
    std::vector<signed char> pred_dir_;
    std::vector<double> pi_, flow_;  // flow_[u] is the flow on pred_[u]

    std::int64_t in_arc_ = -1, join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1;
    double delta_ = 0;

    std::int64_t arc_source(std::int64_t e) const { return e / m_; }
    std::int64_t arc_target(std::int64_t e) const { return n_ + e % m_; }
    double arc_cost(std::int64_t e) const {
        return cost_(static_cast<std::size_t>(e / m_), static_cast<std::size_t>(e % m_));
    }
    bool in_tree(std::int64_t e) const { return pred_[arc_source(e)] == e || pred_[arc_target(e)] == e; }

    void init_tree() {
        const std::int64_t nodes = n_ + m_;
        parent_.assign(nodes, -1);
        pred_.assign(nodes, -1);
        thread_.assign(nodes, -1);
        rev_thread_.assign(nodes, -1);
        succ_num_.assign(nodes, 1);
        last_succ_.assign(nodes, -1);
        pred_dir_.assign(nodes, kUp);
        pi_.assign(nodes, 0.0);
        flow_.assign(nodes, 0.0);

        // Northwest-corner staircase: n + m - 1 arcs forming a spanning tree.
        struct Basic {
            std::int64_t arc;
            double flow;
        };
        std::vector<Basic> basis;
        basis.reserve(static_cast<std::size_t>(nodes - 1));
        std::int64_t i = 0, j = 0;
        double ra = a_[0], rb = b_[0];
        for (std::int64_t k = 0; k < nodes - 1; ++k) {
            const double f = std::max(0.0, std::min(ra, rb));
            basis.push_back({i * m_ + j, f});
            ra -= f;
            rb -= f;
            if (i == n_ - 1) {
                ++j;
                rb = b_[j];
            } else if (j == m_ - 1 || ra <= rb) {
                ++i;
                ra = a_[i];
            } else {
                ++j;
                rb = b_[j];
            }
        }
        std::vector<std::vector<std::pair<std::int64_t, double>>> adj(nodes);
        for (const auto& bsc : basis) {
            adj[arc_source(bsc.arc)].push_back({bsc.arc, bsc.flow});
            adj[arc_target(bsc.arc)].push_back({bsc.arc, bsc.flow});
        }
        // Iterative DFS from node 0 establishes parent, pred and the preorder thread.
        root_ = 0;
        std::vector<std::int64_t> order;
        order.reserve(nodes);
        std::vector<std::int64_t> stack{root_};
        std::vector<char> seen(nodes, 0);
        seen[root_] = 1;
        while (!stack.empty()) {
            const std::int64_t u = stack.back();
            stack.pop_back();
            order.push_back(u);
            for (auto it = adj[u].rbegin(); it != adj[u].rend(); ++it) {
                const std::int64_t e = it->first;
                const std::int64_t v = arc_source(e) == u ? arc_target(e) : arc_source(e);
                if (seen[v]) continue;
                seen[v] = 1;
                parent_[v] = u;
                pred_[v] = e;
                pred_dir_[v] = arc_source(e) == v ? kUp : kDown;
                flow_[v] = it->second;
                stack.push_back(v);
            }
        }
        if (static_cast<std::int64_t>(order.size()) != nodes) throw numerical_error("transport LP: start basis is not a tree");
        for (std::int64_t k = 0; k < nodes; ++k) {
            const std::int64_t u = order[k], v = order[(k + 1) % nodes];
            thread_[u] = v;
            rev_thread_[v] = u;
        }
        for (std::int64_t k = nodes - 1; k >= 0; --k) {
            const std::int64_t u = order[k];
            if (last_succ_[u] < 0) last_succ_[u] = u;
            const std::int64_t p = parent_[u];
            if (p >= 0) {
                succ_num_[p] += succ_num_[u];
                if (last_succ_[p] < 0) last_succ_[p] = last_succ_[u];
            }
        }
        compute_potentials();
    }

    void compute_potentials() {
        pi_[root_] = 0.0;
        for (std::int64_t u = thread_[root_]; u != root_; u = thread_[u]) {
            const std::int64_t p = parent_[u];
            const double c = arc_cost(pred_[u]);
            pi_[u] = pred_dir_[u] == kUp ? pi_[p] - c : pi_[p] + c;
        }
    }

    void init_candidates() {
        const std::size_t k = std::min<std::size_t>(std::max<std::size_t>(per_source_, 1), static_cast<std::size_t>(m_));
        std::vector<std::pair<double, std::int64_t>> row(static_cast<std::size_t>(m_));
        double scale = 0;
        for (std::int64_t i = 0; i < n_; ++i) {
            for (std::int64_t j = 0; j < m_; ++j) row[j] = {arc_cost(i * m_ + j), i * m_ + j};
            std::nth_element(row.begin(), row.begin() + static_cast<long>(k) - 1, row.end());
            for (std::size_t q = 0; q < k; ++q) {
                cand_.push_back(row[q].second);
                cand_cost_.push_back(row[q].first);
            }
            for (const auto& c : row) scale = std::max(scale, std::abs(c.first));
        }
        eps_ = 1e-13 * std::max(scale, 1e-300);
        set_block();
    }

    void set_block() {
        cand_block_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(cand_.size()))));
    }

    bool find_entering_candidate() {
        const std::size_t total = cand_.size();
        double best = -eps_;
        std::size_t cnt = cand_block_;
        in_arc_ = -1;
        std::size_t q = next_cand_ < total ? next_cand_ : 0;
        for (std::size_t k = 0; k < total; ++k) {
            const std::int64_t e = cand_[q];
            const double c = cand_cost_[q] + pi_[arc_source(e)] - pi_[arc_target(e)];
            if (c < best && !in_tree(e)) {
                best = c;
                in_arc_ = e;
            }
            if (++q == total) q = 0;
            if (--cnt == 0) {
                if (in_arc_ >= 0) break;
                cnt = cand_block_;
            }
        }
        next_cand_ = q;
        return in_arc_ >= 0;
    }

    // Prices every arc; violating arcs join the candidate list and the best one enters.
    bool full_scan() {
        double best = -eps_;
        in_arc_ = -1;
        const std::int64_t arcs = n_ * m_;
        for (std::int64_t e = 0; e < arcs; ++e) {
            const double cost = arc_cost(e);
            const double c = cost + pi_[arc_source(e)] - pi_[arc_target(e)];
            if (c < -eps_ && !in_tree(e)) {
                cand_.push_back(e);
                cand_cost_.push_back(cost);
                if (c < best) {
                    best = c;
                    in_arc_ = e;
                }
            }
        }
        set_block();
        return in_arc_ >= 0;
    }

    void find_join_node() {
        std::int64_t u = arc_source(in_arc_), v = arc_target(in_arc_);
        while (u != v) {
            if (succ_num_[u] < succ_num_[v])
                u = parent_[u];
            else
                v = parent_[v];
        }
        join_ = u;
    }

    // Ratio test on the cycle; ties are broken toward the target side so the tree
    // stays strongly feasible.
    void find_leaving_arc() {
        const std::int64_t first = arc_source(in_arc_), second = arc_target(in_arc_);
        delta_ = std::numeric_limits<double>::infinity();
        int result = 0;
        for (std::int64_t u = first; u != join_; u = parent_[u]) {
            if (pred_dir_[u] == kUp && flow_[u] < delta_) {
                delta_ = flow_[u];
                u_out_ = u;
                result = 1;
            }
        }
        for (std::int64_t u = second; u != join_; u = parent_[u]) {
            if (pred_dir_[u] == kDown && flow_[u] <= delta_) {
                delta_ = flow_[u];
                u_out_ = u;
                result = 2;
            }
        }
        if (result == 0) throw numerical_error("transport LP: unbounded cycle");
        if (result == 1) {
            u_in_ = first;
            v_in_ = second;
        } else {
            u_in_ = second;
            v_in_ = first;
        }
    }

    void change_flow() {
        const double val = delta_;
        if (val > 0.0) {
            for (std::int64_t u = arc_source(in_arc_); u != join_; u = parent_[u]) flow_[u] -= pred_dir_[u] * val;
            for (std::int64_t u = arc_target(in_arc_); u != join_; u = parent_[u]) flow_[u] += pred_dir_[u] * val;
        }
    }

    void update_tree_structure() {
        const std::int64_t old_rev_thread = rev_thread_[u_out_];
        const std::int64_t old_succ_num = succ_num_[u_out_];
        const std::int64_t old_last_succ = last_succ_[u_out_];
        const std::int64_t v_out = parent_[u_out_];

        if (u_in_ == u_out_) {
            parent_[u_in_] = v_in_;
            pred_[u_in_] = in_arc_;
            pred_dir_[u_in_] = u_in_ == arc_source(in_arc_) ? kUp : kDown;
            flow_[u_in_] = delta_;
            if (thread_[v_in_] != u_out_) {
                std::int64_t after = thread_[old_last_succ];
                thread_[old_rev_thread] = after;
                rev_thread_[after] = old_rev_thread;
                after = thread_[v_in_];
                thread_[v_in_] = u_out_;
                rev_thread_[u_out_] = v_in_;
                thread_[old_last_succ] = after;
                rev_thread_[after] = old_last_succ;
            }
        } else {
            const std::int64_t thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
            std::int64_t stem = u_in_, par_stem = v_in_, next_stem;
            std::int64_t last = last_succ_[u_in_];
            std::int64_t before, after = thread_[last];
            thread_[v_in_] = u_in_;
            dirty_.clear();
            dirty_.push_back(v_in_);
            while (stem != u_out_) {
                next_stem = parent_[stem];
                thread_[last] = next_stem;
                dirty_.push_back(last);
                before = rev_thread_[stem];
                thread_[before] = after;
                rev_thread_[after] = before;
                parent_[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
                after = thread_[last];
            }
            parent_[u_out_] = par_stem;
            thread_[last] = thread_continue;
            rev_thread_[thread_continue] = last;
            last_succ_[u_out_] = last;
            if (old_rev_thread != v_in_) {
                thread_[old_rev_thread] = after;
                rev_thread_[after] = old_rev_thread;
            }
            for (std::int64_t u : dirty_) rev_thread_[thread_[u]] = u;

            // Reverse pred arcs (and their flows) along the stem from u_out to u_in.
            std::int64_t tmp_sc = 0;
            const std::int64_t tmp_ls = last_succ_[u_out_];
            for (std::int64_t u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
                pred_[u] = pred_[p];
                pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
                flow_[u] = flow_[p];
                tmp_sc += succ_num_[u] - succ_num_[p];
                succ_num_[u] = tmp_sc;
                last_succ_[p] = tmp_ls;
            }
            pred_[u_in_] = in_arc_;
            pred_dir_[u_in_] = u_in_ == arc_source(in_arc_) ? kUp : kDown;
            flow_[u_in_] = delta_;
            succ_num_[u_in_] = old_succ_num;
        }

        const std::int64_t up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
        const std::int64_t last_succ_out = last_succ_[u_out_];
        for (std::int64_t u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;

        if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
            for (std::int64_t u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
                last_succ_[u] = old_rev_thread;
        } else if (last_succ_out != old_last_succ) {
            for (std::int64_t u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
                last_succ_[u] = last_succ_out;
        }

        for (std::int64_t u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
        for (std::int64_t u = v_out; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
    }

    void update_potential() {
        const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * arc_cost(in_arc_);
        const std::int64_t end = thread_[last_succ_[u_in_]];
        for (std::int64_t u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
    }
};

template <class CostFn>
TransportSolution solve_transport(std::vector<double> supply, std::vector<double> demand, CostFn cost) {
    TransportSimplex<CostFn> s(std::move(supply), std::move(demand), std::move(cost));
    return s.solve();
}

} // namespace otto::lp
