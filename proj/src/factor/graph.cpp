#include "quadrics/factor/graph.hpp"

#include <vector>

namespace quadrics::factor {
namespace {

struct Layout {
  std::vector<int> observer_offset;  // -1 when fixed
  std::vector<int> quadric_offset;
  int dim = 0;
};

Layout make_layout(const FactorGraph& g) {
  Layout L;
  const auto& st = g.initial;
  for (std::size_t i = 0; i < st.observers.size(); ++i) {
    const bool fixed = i < g.observer_fixed.size() && g.observer_fixed[i];
    L.observer_offset.push_back(fixed ? -1 : L.dim);
    if (!fixed) L.dim += 6;
  }
  for (std::size_t i = 0; i < st.quadrics.size(); ++i) {
    const bool fixed = i < g.quadric_fixed.size() && g.quadric_fixed[i];
    L.quadric_offset.push_back(fixed ? -1 : L.dim);
    if (!fixed) L.dim += 9;
  }
  return L;
}

void validate(const FactorGraph& g, const Layout& L) {
  std::vector<bool> obs_used(g.initial.observers.size(), false);
  std::vector<bool> quad_used(g.initial.quadrics.size(), false);
  for (const auto& f : g.factors) {
    if (f.observer < 0 || f.observer >= static_cast<int>(obs_used.size()) || f.quadric < 0 ||
        f.quadric >= static_cast<int>(quad_used.size())) {
      throw InvalidArgument("factor references a missing variable");
    }
    obs_used[static_cast<std::size_t>(f.observer)] = true;
    quad_used[static_cast<std::size_t>(f.quadric)] = true;
  }
  for (std::size_t i = 0; i < obs_used.size(); ++i) {
    if (!obs_used[i] && L.observer_offset[i] >= 0) {
      throw InvalidArgument("observer " + std::to_string(i) + " is bound by no factor");
    }
  }
  for (std::size_t i = 0; i < quad_used.size(); ++i) {
    if (!quad_used[i] && L.quadric_offset[i] >= 0) {
      throw InvalidArgument("quadric " + std::to_string(i) + " is bound by no factor");
    }
  }
}

struct GraphProblem {
  using State = GraphState;
  using Hessian = Eigen::SparseMatrix<double>;

  const FactorGraph& graph;
  const Layout& layout;

  double cost(const State& s) const { return graph_cost(graph, s); }

  double linearize(const State& s, Hessian& H, Eigen::VectorXd& g) const {
    g = Eigen::VectorXd::Zero(layout.dim);
    std::vector<Eigen::Triplet<double>> trip;
    double c = 0.0;
    for (const auto& f : graph.factors) {
      const auto& r = s.observers[static_cast<std::size_t>(f.observer)];
      const auto& q = s.quadrics[static_cast<std::size_t>(f.quadric)];
      const auto e = error(f.measurement, r, q).stacked();
      c += 0.5 * e.squaredNorm();
      const Jacobian J = jacobian(f.measurement, r, q);
      // Blocks of this factor: (column start in J, width, global offset).
      const int oo = layout.observer_offset[static_cast<std::size_t>(f.observer)];
      const int qo = layout.quadric_offset[static_cast<std::size_t>(f.quadric)];
      const std::array<std::array<int, 3>, 2> blocks{{{0, 6, oo}, {6, 9, qo}}};
      for (const auto& bi : blocks) {
        if (bi[2] < 0) continue;
        g.segment(bi[2], bi[1]) += J.middleCols(bi[0], bi[1]).transpose() * e;
        for (const auto& bj : blocks) {
          if (bj[2] < 0) continue;
          const Eigen::MatrixXd Hij =
              J.middleCols(bi[0], bi[1]).transpose() * J.middleCols(bj[0], bj[1]);
          for (int a = 0; a < bi[1]; ++a) {
            for (int b = 0; b < bj[1]; ++b) {
              if (Hij(a, b) != 0.0) trip.emplace_back(bi[2] + a, bj[2] + b, Hij(a, b));
            }
          }
        }
      }
    }
    H.resize(layout.dim, layout.dim);
    H.setFromTriplets(trip.begin(), trip.end());
    // Keep every diagonal entry structurally present for damping.
    for (int i = 0; i < layout.dim; ++i) H.coeffRef(i, i) += 0.0;
    H.makeCompressed();
    return c;
  }

  State retract(const State& s, const Eigen::VectorXd& dx) const {
    State out = s;
    for (std::size_t i = 0; i < s.observers.size(); ++i) {
      const int o = layout.observer_offset[i];
      if (o >= 0) out.observers[i] = factor::retract(s.observers[i], dx.segment<6>(o));
    }
    for (std::size_t i = 0; i < s.quadrics.size(); ++i) {
      const int o = layout.quadric_offset[i];
      if (o >= 0) out.quadrics[i] = factor::retract(s.quadrics[i], dx.segment<9>(o));
    }
    return out;
  }
};

}  // namespace

double graph_cost(const FactorGraph& graph, const GraphState& state) {
  double c = 0.0;
  for (const auto& f : graph.factors) {
    c += 0.5 * error(f.measurement, state.observers[static_cast<std::size_t>(f.observer)],
                     state.quadrics[static_cast<std::size_t>(f.quadric)])
                   .stacked()
                   .squaredNorm();
  }
  return c;
}

GraphResult solve_lm(const FactorGraph& graph, const LMConfig& config) {
  const Layout layout = make_layout(graph);
  validate(graph, layout);
  GraphResult out;
  if (layout.dim == 0) {
    out.state = graph.initial;
    out.converged = true;
    out.initial_error = out.final_error = 2.0 * graph_cost(graph, graph.initial);
    return out;
  }
  const GraphProblem problem{graph, layout};
  auto r = levenberg_marquardt(problem, graph.initial, config);
  out.state = std::move(r.state);
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.initial_error = 2.0 * r.initial_cost;
  out.final_error = 2.0 * r.final_cost;
  return out;
}

}  // namespace quadrics::factor
