#pragma once

// Layer stacks: F(D₁,…,D_k) = −λ_max(Sym(D_k A_k ⋯ D₁ A₁)) with one shared floor m.
//
// For the rightmost eigenvector x of the symmetrized product,
//   z_i = A_i D_{i−1} A_{i−1} ⋯ D₁ A₁ x,   w_i = A_{i+1}ᵀ D_{i+1} ⋯ A_kᵀ D_k x  (w_k = x),
// and ∂λ/∂(D_i)_jj = (z_i)_j (w_i)_j.

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "contractive/flow.hpp"
#include "contractive/inner.hpp"
#include "contractive/outer.hpp"

namespace contractive {

struct LayerStack {
  std::vector<Matrix> layers;  // A₁ first

  Index dim() const { return layers.empty() ? 0 : layers.front().rows(); }
  Index depth() const { return static_cast<Index>(layers.size()); }

  void validate(const char* where) const {
    if (layers.empty()) throw std::invalid_argument(std::string(where) + ": empty layer stack");
    for (const Matrix& a : layers) {
      require_square(a, where);
      if (a.rows() != dim()) throw std::invalid_argument(std::string(where) + ": layer dimensions differ");
    }
  }
};

struct MultiExtremizer {
  std::vector<DiagonalIterate> iterates;
  double lambda = 0.0;
  Vector x;
  std::vector<Vector> z;
  std::vector<Vector> w;
  std::vector<Partition> partitions;
  bool converged = true;
  bool near_multiple = false;
  long steps = 0;

  double F() const { return -lambda; }
};

namespace detail {

struct ProductChains {
  EigenPair eig;
  std::vector<Vector> z;
  std::vector<Vector> w;
};

/// Evaluates the symmetrized product at the stacked diagonal `d` (layer i occupies
/// entries [i n, (i+1) n)).
inline ProductChains product_chains(const LayerStack& stack, const Vector& d) {
  const Index n = stack.dim();
  const Index k = stack.depth();
  Matrix p = d.segment(0, n).asDiagonal() * stack.layers[0];
  for (Index i = 1; i < k; ++i) p = d.segment(i * n, n).asDiagonal() * (stack.layers[i] * p);

  ProductChains out;
  out.eig = rightmost_eigenpair(symmetrize(p));
  const Vector& x = out.eig.vector;
  out.z.resize(k);
  out.w.resize(k);
  Vector v = x;
  for (Index i = 0; i < k; ++i) {
    out.z[i] = stack.layers[i] * v;
    v = d.segment(i * n, n).cwiseProduct(out.z[i]);
  }
  Vector u = x;
  for (Index i = k - 1; i >= 0; --i) {
    out.w[i] = u;
    if (i > 0) u = stack.layers[i].transpose() * d.segment(i * n, n).cwiseProduct(u);
  }
  return out;
}

}  // namespace detail

class MultiLayerObjective {
 public:
  explicit MultiLayerObjective(const LayerStack& stack) : stack_(stack) {}

  Index size() const { return stack_.dim() * stack_.depth(); }

  Evaluation evaluate(const Vector& d) const {
    detail::ProductChains c = detail::product_chains(stack_, d);
    const Index n = stack_.dim();
    Evaluation e;
    e.lambda = c.eig.value;
    e.ascent.resize(size());
    for (Index i = 0; i < stack_.depth(); ++i) e.ascent.segment(i * n, n) = c.z[i].cwiseProduct(c.w[i]);
    e.eig = std::move(c.eig);
    return e;
  }

 private:
  const LayerStack& stack_;
};

namespace detail {

inline Vector stack_diagonals(const std::vector<DiagonalIterate>& ds, const LayerStack& stack,
                              const char* where) {
  stack.validate(where);
  if (static_cast<Index>(ds.size()) != stack.depth())
    throw std::invalid_argument(std::string(where) + ": one diagonal per layer required");
  const Index n = stack.dim();
  Vector d(n * stack.depth());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].size() != n) throw std::invalid_argument(std::string(where) + ": dimension mismatch");
    if (ds[i].floor != ds.front().floor)
      throw std::invalid_argument(std::string(where) + ": all layers must share one floor");
    d.segment(static_cast<Index>(i) * n, n) = ds[i].d;
  }
  return d;
}

inline MultiExtremizer make_multi_extremizer(const LayerStack& stack, const Vector& d, double floor,
                                             double eps_active) {
  const Index n = stack.dim();
  ProductChains c = product_chains(stack, d);
  MultiExtremizer e;
  e.lambda = c.eig.value;
  e.x = c.eig.vector;
  e.near_multiple = c.eig.near_multiple;
  e.z = std::move(c.z);
  e.w = std::move(c.w);
  for (Index i = 0; i < stack.depth(); ++i) {
    e.iterates.push_back(DiagonalIterate{d.segment(i * n, n), floor});
    e.partitions.push_back(Partition::of(e.iterates.back(), eps_active));
  }
  return e;
}

}  // namespace detail

inline std::pair<double, EigenPair> product_functional(const std::vector<DiagonalIterate>& ds,
                                                       const LayerStack& stack) {
  const Vector d = detail::stack_diagonals(ds, stack, "multilayer/product_functional");
  detail::ProductChains c = detail::product_chains(stack, d);
  return {-c.eig.value, std::move(c.eig)};
}

/// Per-layer flow directions z_i ∘ w_i.
inline std::vector<Vector> multilayer_gradients(const std::vector<DiagonalIterate>& ds,
                                                const LayerStack& stack) {
  const Vector d = detail::stack_diagonals(ds, stack, "multilayer/multilayer_gradients");
  detail::ProductChains c = detail::product_chains(stack, d);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < c.z.size(); ++i) out.push_back(c.z[i].cwiseProduct(c.w[i]));
  return out;
}

inline std::vector<Vector> multilayer_gradients(const MultiExtremizer& e) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < e.z.size(); ++i) out.push_back(e.z[i].cwiseProduct(e.w[i]));
  return out;
}

inline double default_grad_tol(const LayerStack& stack) {
  double norm = 1.0;
  for (const Matrix& a : stack.layers) norm *= spectral_norm(a);
  return 1e-9 * (1.0 + norm);
}

inline MultiExtremizer minimize_F_multilayer(const LayerStack& stack, double m,
                                             const std::optional<std::vector<DiagonalIterate>>& d0,
                                             const FlowConfig& cfg) {
  stack.validate("multilayer/minimize_F");
  cfg.validate();
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("multilayer/minimize_F: m must lie in [0, 1]");
  DiagonalIterate start{Vector::Ones(stack.dim() * stack.depth()), m};
  if (d0) {
    start.d = detail::stack_diagonals(*d0, stack, "multilayer/minimize_F");
    start.validate("multilayer/minimize_F");
  }
  const double grad_tol = cfg.grad_tol.value_or(default_grad_tol(stack));
  MultiStartResult r = minimize_multistart(MultiLayerObjective(stack), start, cfg, grad_tol);
  MultiExtremizer e = detail::make_multi_extremizer(stack, r.best.iterate.d, m, cfg.eps_active);
  e.converged = r.best.converged;
  e.near_multiple = e.near_multiple || r.best.near_multiple_seen;
  e.steps = r.best.steps;
  return e;
}

/// φ'[m] = −Σ_i Σ_{j ∈ I₂⁽ⁱ⁾} (w_i)_j (z_i)_j; absent when no entry of any layer is at m.
inline PhiDerivative phi_and_derivative(const MultiExtremizer& e) {
  PhiDerivative out;
  out.phi = -e.lambda;
  bool any = false;
  double s = 0.0;
  for (std::size_t i = 0; i < e.partitions.size(); ++i) {
    for (Index j : e.partitions[i].at_floor) {
      any = true;
      s += e.w[i](j) * e.z[i](j);
    }
  }
  if (any) out.dphi = -s;
  return out;
}

using MultiMStarSolve = LevelSolve<MultiExtremizer>;

inline MultiMStarSolve solve_mstar_multilayer(const LayerStack& stack, const OuterConfig& cfg) {
  stack.validate("multilayer/solve_mstar");
  cfg.validate();
  Matrix product = stack.layers[0];
  for (std::size_t i = 1; i < stack.layers.size(); ++i) product = stack.layers[i] * product;
  const double mu = mu2(product);
  if (mu + cfg.target >= 0.0) {
    throw NotContractive("multilayer/solve_mstar",
                         "mu2 of the layer product + target = " + std::to_string(mu + cfg.target) + " >= 0");
  }
  double m0 = 0.5;
  if (stack.depth() == 1) m0 = std::min(upper_bound_mstar(stack.layers[0], cfg.target), 1.0 - 1e-3);
  m0 = cfg.m0.value_or(m0);
  FlowConfig flow = cfg.flow;
  if (!flow.grad_tol) flow.grad_tol = default_grad_tol(stack);

  auto evaluate = [&](double m, const MultiExtremizer* prev) {
    std::optional<std::vector<DiagonalIterate>> start;
    if (prev) {
      start.emplace();
      for (const DiagonalIterate& it : prev->iterates) start->push_back(rescale_floor(it, m, flow.eps_active));
    }
    return minimize_F_multilayer(stack, m, start, flow);
  };
  auto info = [](const MultiExtremizer& e) {
    detail::LevelInfo li;
    li.lambda = e.lambda;
    li.converged = e.converged;
    if (auto pd = phi_and_derivative(e); pd.dphi) li.dlambda = -*pd.dphi;
    return li;
  };
  return detail::newton_bisection<MultiExtremizer>(evaluate, info, m0, cfg);
}

}  // namespace contractive
