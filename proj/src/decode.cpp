#include "charparse/decoder/decode.hpp"

#include <cmath>
#include <vector>

#include "charparse/util/error.hpp"

namespace charparse::decoder {

namespace {

// Finite stand-in for minus infinity: forbidden arcs must stay comparable
// under the subtractions done during contraction.
constexpr double kForbidden = -1e30;

// Dense max-arborescence by recursive cycle contraction. w is (k x k)
// row-major with w[u*k+v] = score of arc u -> v; node 0 is the root.
// Returns parent[v] for v in 1..k-1.
std::vector<int> arborescence(int k, std::vector<double> w) {
  std::vector<int> pi(static_cast<size_t>(k), -1);
  for (int v = 1; v < k; ++v) {
    int best = -1;
    double bw = 0;
    for (int u = 0; u < k; ++u) {
      if (u == v) continue;
      double cand = w[static_cast<size_t>(u) * k + v];
      if (best < 0 || cand > bw) {
        best = u;
        bw = cand;
      }
    }
    pi[static_cast<size_t>(v)] = best;
  }

  // Look for a cycle among the greedy picks.
  std::vector<int> color(static_cast<size_t>(k), 0);  // 0 new, 1 on path, 2 done
  color[0] = 2;
  std::vector<int> cycle;
  for (int v = 1; v < k && cycle.empty(); ++v) {
    if (color[static_cast<size_t>(v)] != 0) continue;
    int cur = v;
    std::vector<int> path;
    while (color[static_cast<size_t>(cur)] == 0) {
      color[static_cast<size_t>(cur)] = 1;
      path.push_back(cur);
      cur = pi[static_cast<size_t>(cur)];
    }
    if (color[static_cast<size_t>(cur)] == 1) {
      size_t at = 0;
      while (path[at] != cur) ++at;
      cycle.assign(path.begin() + static_cast<std::ptrdiff_t>(at), path.end());
    }
    for (int x : path) color[static_cast<size_t>(x)] = 2;
  }
  if (cycle.empty()) return pi;

  std::vector<bool> in_cycle(static_cast<size_t>(k), false);
  for (int v : cycle) in_cycle[static_cast<size_t>(v)] = true;

  // Contract the cycle into one supernode, placed last in the new id space.
  std::vector<int> old_of;  // new id -> old id (supernode omitted)
  std::vector<int> new_of(static_cast<size_t>(k), -1);
  for (int v = 0; v < k; ++v) {
    if (in_cycle[static_cast<size_t>(v)]) continue;
    new_of[static_cast<size_t>(v)] = static_cast<int>(old_of.size());
    old_of.push_back(v);
  }
  int kk = static_cast<int>(old_of.size()) + 1;
  int super = kk - 1;

  std::vector<double> w2(static_cast<size_t>(kk) * kk, kForbidden);
  // enter_choice[u'] = cycle node whose incoming arc from old node u wins.
  std::vector<int> enter_choice(static_cast<size_t>(kk), -1);
  std::vector<int> leave_choice(static_cast<size_t>(kk), -1);

  for (int u = 0; u < k; ++u) {
    if (in_cycle[static_cast<size_t>(u)]) continue;
    int un = new_of[static_cast<size_t>(u)];
    for (int v = 0; v < k; ++v) {
      if (u == v) continue;
      double wu = w[static_cast<size_t>(u) * k + v];
      if (!in_cycle[static_cast<size_t>(v)]) {
        w2[static_cast<size_t>(un) * kk + new_of[static_cast<size_t>(v)]] = wu;
      } else {
        double adj = wu - w[static_cast<size_t>(pi[static_cast<size_t>(v)]) * k + v];
        if (adj > w2[static_cast<size_t>(un) * kk + super]) {
          w2[static_cast<size_t>(un) * kk + super] = adj;
          enter_choice[static_cast<size_t>(un)] = v;
        }
      }
    }
  }
  for (int v = 0; v < k; ++v) {
    if (in_cycle[static_cast<size_t>(v)]) continue;
    int vn = new_of[static_cast<size_t>(v)];
    for (int u : cycle) {
      double wu = w[static_cast<size_t>(u) * k + v];
      if (wu > w2[static_cast<size_t>(super) * kk + vn]) {
        w2[static_cast<size_t>(super) * kk + vn] = wu;
        leave_choice[static_cast<size_t>(vn)] = u;
      }
    }
  }

  std::vector<int> sub = arborescence(kk, std::move(w2));

  std::vector<int> out(static_cast<size_t>(k), -1);
  // Arcs inside the cycle survive except the one displaced by the entering arc.
  int entered_old = sub[static_cast<size_t>(super)];
  int broken = enter_choice[static_cast<size_t>(entered_old)];
  if (broken < 0) throw NumericError("cle: contracted cycle has no entering arc");
  for (int v : cycle)
    if (v != broken) out[static_cast<size_t>(v)] = pi[static_cast<size_t>(v)];
  out[static_cast<size_t>(broken)] = old_of[static_cast<size_t>(entered_old)];
  for (int vn = 0; vn < kk - 1; ++vn) {
    int v = old_of[static_cast<size_t>(vn)];
    if (v == 0) continue;
    int p = sub[static_cast<size_t>(vn)];
    out[static_cast<size_t>(v)] =
        p == super ? leave_choice[static_cast<size_t>(vn)] : old_of[static_cast<size_t>(p)];
  }
  return out;
}

std::vector<double> arc_weights(const ScoreMatrix& m, int forced_root_child) {
  int k = m.n + 1;
  std::vector<double> w(static_cast<size_t>(k) * k, kForbidden);
  for (int dep = 1; dep <= m.n; ++dep)
    for (int head = 0; head <= m.n; ++head) {
      if (head == dep) continue;
      if (forced_root_child > 0 && head == 0 && dep != forced_root_child) continue;
      w[static_cast<size_t>(head) * k + dep] = m.at(dep, head);
    }
  return w;
}

}  // namespace

bool is_valid_tree(const Heads& heads) {
  int n = static_cast<int>(heads.size()) - 1;
  if (n < 1) return false;
  for (int v = 1; v <= n; ++v) {
    int h = heads[static_cast<size_t>(v)];
    if (h < 0 || h > n || h == v) return false;
  }
  for (int v = 1; v <= n; ++v) {
    int cur = v, hops = 0;
    while (cur != 0) {
      cur = heads[static_cast<size_t>(cur)];
      if (++hops > n) return false;
    }
  }
  return true;
}

double tree_score(const ScoreMatrix& m, const Heads& heads) {
  if (static_cast<int>(heads.size()) != m.n + 1)
    throw NumericError("tree_score: heads size does not match score matrix");
  double s = 0;
  for (int dep = 1; dep <= m.n; ++dep) s += m.at(dep, heads[static_cast<size_t>(dep)]);
  return s;
}

Heads greedy_heads(const ScoreMatrix& m) {
  Heads out(static_cast<size_t>(m.n) + 1, -1);
  for (int dep = 1; dep <= m.n; ++dep) {
    int best = -1;
    double bw = 0;
    for (int head = 0; head <= m.n; ++head) {
      if (head == dep) continue;
      double cand = m.at(dep, head);
      if (best < 0 || cand > bw) {
        best = head;
        bw = cand;
      }
    }
    out[static_cast<size_t>(dep)] = best;
  }
  return out;
}

Heads cle_heads(const ScoreMatrix& m) {
  if (m.n < 1) throw NumericError("cle: empty sentence");
  return arborescence(m.n + 1, arc_weights(m, 0));
}

Heads cle_heads_single_root(const ScoreMatrix& m) {
  if (m.n < 1) throw NumericError("cle: empty sentence");
  Heads best;
  double best_score = 0;
  for (int r = 1; r <= m.n; ++r) {
    Heads h = arborescence(m.n + 1, arc_weights(m, r));
    double s = tree_score(m, h);
    if (best.empty() || s > best_score) {
      best = std::move(h);
      best_score = s;
    }
  }
  return best;
}

DecoderComparison compare_decoders(std::span<const ScoreMatrix> matrices) {
  DecoderComparison c;
  double gap_sum = 0;
  int gap_count = 0;
  for (const ScoreMatrix& m : matrices) {
    ++c.sentences;
    Heads g = greedy_heads(m);
    Heads e = cle_heads(m);
    if (g == e) ++c.identical;
    if (!is_valid_tree(g)) {
      // a cyclic assignment has no tree score to compare
      ++c.greedy_nontree;
      continue;
    }
    gap_sum += tree_score(m, e) - tree_score(m, g);
    ++gap_count;
  }
  c.mean_score_gap = gap_count ? gap_sum / gap_count : 0.0;
  return c;
}

}  // namespace charparse::decoder
