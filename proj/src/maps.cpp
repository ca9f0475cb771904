#include "carnot/maps.hpp"

#include <cmath>

#include "carnot/catalog.hpp"

namespace carnot {

MapHandle map_identity(const GroupBundle& g) {
  MapHandle m;
  m.name = "identity";
  m.source = g;
  m.target = g;
  m.eval = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
  m.declared_lipschitz = 1.0;
  m.multiplicity = 1;
  m.exact_differential = std::make_shared<HHomomorphism>(hhom_identity(g));
  return m;
}

MapHandle map_constant(const GroupBundle& source, const GroupBundle& target) {
  MapHandle m;
  m.name = "constant";
  m.source = source;
  m.target = target;
  const int nt = target.dim();
  m.eval = [nt](std::span<const double>) { return std::vector<double>(nt, 0.0); };
  m.declared_lipschitz = 0.0;
  return m;
}

MapHandle map_dilation(const GroupBundle& g, double lambda) {
  auto h = hhom_dilation(g, lambda);
  auto m = map_from_hhom(h, "dilate:" + std::to_string(lambda));
  m.declared_lipschitz = lambda;
  m.multiplicity = 1;
  return m;
}

MapHandle map_from_hhom(const HHomomorphism& h, const std::string& name) {
  MapHandle m;
  m.name = name;
  m.source = h.source();
  m.target = h.target();
  auto ptr = std::make_shared<HHomomorphism>(h);
  m.eval = [ptr](std::span<const double> x) { return ptr->apply(x); };
  m.declared_lipschitz = h.lipschitz_bound();
  m.exact_differential = ptr;
  return m;
}

MapHandle map_left_translate(const std::vector<double>& c, const MapHandle& f) {
  MapHandle m = f;
  m.name = "left-translate(" + f.name + ")";
  const auto sc = f.target.sc;
  const std::vector<double> shift = c;
  auto inner = f.eval;
  m.eval = [sc, shift, inner](std::span<const double> x) {
    return multiply<double>(sc, shift, inner(x));
  };
  return m;
}

MapHandle map_right_translate(const GroupBundle& g, const std::vector<double>& c) {
  MapHandle m;
  m.name = "right-translate";
  m.source = g;
  m.target = g;
  const auto sc = g.sc;
  const std::vector<double> shift = c;
  m.eval = [sc, shift](std::span<const double> x) {
    return multiply<double>(sc, std::vector<double>(x.begin(), x.end()), shift);
  };
  return m;
}

MapHandle map_layer1_projection(const GroupBundle& source) {
  auto m = map_from_hhom(hhom_layer1_projection(source), "proj-layer1");
  m.declared_lipschitz = 1.0;  // |pi_1(x^{-1}y)| <= ||x^{-1}y||
  return m;
}

MapHandle map_fold_abs(const GroupBundle& abelian) {
  if (abelian.step() != 1) throw std::invalid_argument("map_fold_abs: abelian source required");
  MapHandle m;
  m.name = "fold-abs";
  m.source = abelian;
  m.target = abelian;
  m.eval = [](std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    y[0] = std::fabs(y[0]);
    return y;
  };
  m.declared_lipschitz = 1.0;
  m.multiplicity = 2;
  return m;
}

MapHandle map_quadratic_perturbation(const HHomomorphism& h, double amplitude) {
  MapHandle m;
  m.name = "quadratic-perturbation";
  m.source = h.source();
  m.target = h.target();
  const auto tgt = h.target();
  const auto src_grad = h.source().gradation();
  auto ptr = std::make_shared<HHomomorphism>(h);
  const int n1 = src_grad.layer_dim(1);
  const int t1 = tgt.gradation().layer_dim(1);
  m.eval = [ptr, tgt, src_grad, n1, t1, amplitude](std::span<const double> x) {
    std::vector<double> w(tgt.dim(), 0.0);
    // Layer-1 perturbation quadratic in the source layer-1 coordinates.
    for (int r = 0; r < t1; ++r) {
      double q = 0.0;
      for (int c = 0; c < n1; ++c) {
        const double v = x[src_grad.layer_offset(1) + c];
        q += (r + c % 2 ? 1.0 : 0.5) * v * v;
      }
      w[r] = amplitude * q;
    }
    return multiply<double>(tgt.sc, ptr->apply(x), w);
  };
  m.declared_lipschitz = std::nullopt;  // locally Lipschitz only
  return m;
}

MapHandle map_piecewise(const HHomomorphism& l1, const HHomomorphism& l2,
                        const std::vector<double>& layer1_normal) {
  MapHandle m;
  m.name = "piecewise-hhom";
  m.source = l1.source();
  m.target = l1.target();
  auto a = std::make_shared<HHomomorphism>(l1);
  auto b = std::make_shared<HHomomorphism>(l2);
  const std::vector<double> nrm = layer1_normal;
  const auto grad = l1.source().gradation();
  m.eval = [a, b, nrm, grad](std::span<const double> x) {
    double dot = 0.0;
    for (std::size_t c = 0; c < nrm.size(); ++c) dot += nrm[c] * x[grad.layer_offset(1) + c];
    return dot >= 0.0 ? a->apply(x) : b->apply(x);
  };
  return m;
}

MapHandle make_product_lipschitz_map(const ProductMapSpec& spec) {
  const int K = static_cast<int>(spec.factors.size());
  if (K < 1) throw ProductMapError("product map: at least one factor required");
  if (static_cast<int>(spec.weights.size()) != K)
    throw ProductMapError("product map: one weight per factor required");
  for (const double r : spec.weights)
    if (!(r > 0.0)) throw ProductMapError("product map: weights must be positive");

  const GroupBundle source = spec.factors.front().map.source();
  const auto& heis = make_heisenberg();
  std::vector<double> x0 = spec.basepoint;
  if (x0.empty()) x0.assign(source.dim(), 0.0);

  // Basepoint normalization f^k(x0) = 0; without it the dilated factors need
  // not land in the product space.
  std::vector<std::function<std::vector<double>(std::span<const double>)>> evals;
  std::vector<double> lips;
  for (int k = 0; k < K; ++k) {
    const auto& f = spec.factors[k];
    if (!(f.map.target().gradation() == heis.gradation()))
      throw ProductMapError("product map: factors must map into the Heisenberg group");
    if (!(f.map.source().gradation() == source.gradation()))
      throw ProductMapError("product map: factors must share the source group");
    std::vector<double> at0 = f.map.apply(std::span<const double>(x0));
    if (f.offset) at0 = multiply<double>(heis.sc, *f.offset, at0);
    if (heis.norm.value(at0) > 1e-12)
      throw ProductMapError("product map: factor " + std::to_string(k) +
                            " violates the vanishing normalization f^k(x0) = 0");
    auto h = std::make_shared<HHomomorphism>(f.map);
    if (f.offset) {
      const std::vector<double> c = *f.offset;
      const auto hsc = heis.sc;
      evals.push_back([h, c, hsc](std::span<const double> x) {
        return multiply<double>(hsc, c, h->apply(x));
      });
    } else {
      evals.push_back([h](std::span<const double> x) { return h->apply(x); });
    }
    lips.push_back(f.map.lipschitz_bound());
  }

  // Normalize factors with L_k > 1 (f' = delta_{1/L} f, r' = r L leaves
  // g_k unchanged) so that C0 = (sum r_k^2 L_k)^(1/2) is a true bound.
  std::vector<double> r = spec.weights;
  double c0sq = 0.0;
  for (int k = 0; k < K; ++k) {
    double L = lips[k];
    double rk = r[k];
    if (L > 1.0) {
      rk *= L;
      L = 1.0;
    }
    c0sq += rk * rk * L;
    r[k] = spec.weights[k];
  }

  MapHandle m;
  m.name = "product-map:K=" + std::to_string(K);
  m.source = source;
  m.target = make_h_product(K);
  m.declared_lipschitz = std::sqrt(c0sq);
  const auto hgrad = heis.gradation();
  const std::vector<double> weights = spec.weights;
  m.eval = [evals, weights, K](std::span<const double> x) {
    std::vector<double> out(3 * K, 0.0);
    for (int k = 0; k < K; ++k) {
      const auto v = evals[k](x);
      const double rk = weights[k];
      out[k] = rk * v[0];
      out[K + k] = rk * v[1];
      out[2 * K + k] = rk * rk * v[2];
    }
    return out;
  };
  return m;
}

}  // namespace carnot
