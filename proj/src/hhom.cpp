#include "carnot/hhom.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "carnot/catalog.hpp"
#include "carnot/rng.hpp"

namespace carnot {

namespace {

Eigen::MatrixXd to_eigen(const RatMatrix& m) {
  const int rows = static_cast<int>(m.size());
  const int cols = rows ? static_cast<int>(m[0].size()) : 0;
  Eigen::MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(m[i].size()) != cols)
      throw StructuralError("hhom: ragged rational block");
    for (int j = 0; j < cols; ++j) out(i, j) = to_double(m[i][j]);
  }
  return out;
}

}  // namespace

HHomomorphism::HHomomorphism(GroupBundle source, GroupBundle target,
                             std::vector<Eigen::MatrixXd> blocks)
    : source_(std::move(source)), target_(std::move(target)), blocks_(std::move(blocks)) {
  check_shapes();
}

HHomomorphism::HHomomorphism(GroupBundle source, GroupBundle target,
                             std::vector<RatMatrix> rational_blocks)
    : source_(std::move(source)), target_(std::move(target)), rblocks_(std::move(rational_blocks)) {
  blocks_.reserve(rblocks_.size());
  for (const auto& rb : rblocks_) blocks_.push_back(to_eigen(rb));
  check_shapes();
}

void HHomomorphism::check_shapes() const {
  const int ssteps = source_.step();
  if (static_cast<int>(blocks_.size()) != ssteps)
    throw StructuralError("hhom: one block per source layer required (possibly empty)");
  for (int i = 1; i <= ssteps; ++i) {
    const auto& b = blocks_[i - 1];
    if (i > target_.step()) {
      if (b.size() != 0) throw StructuralError("hhom: block present for a missing target layer");
      continue;
    }
    if (b.rows() != target_.gradation().layer_dim(i) ||
        b.cols() != source_.gradation().layer_dim(i))
      throw StructuralError("hhom: block shape mismatch on layer " + std::to_string(i));
  }
}

std::vector<double> HHomomorphism::apply(std::span<const double> x) const {
  const auto& sg = source_.gradation();
  const auto& tg = target_.gradation();
  if (static_cast<int>(x.size()) != sg.total_dim())
    throw StructuralError("hhom: coordinate length mismatch");
  std::vector<double> out(tg.total_dim(), 0.0);
  for (int i = 1; i <= std::min(sg.step(), tg.step()); ++i) {
    const auto& b = blocks_[i - 1];
    const int so = sg.layer_offset(i);
    const int to = tg.layer_offset(i);
    for (int r = 0; r < b.rows(); ++r) {
      double acc = 0.0;
      for (int c = 0; c < b.cols(); ++c) acc += b(r, c) * x[so + c];
      out[to + r] = acc;
    }
  }
  return out;
}

std::vector<Rat> HHomomorphism::apply(std::span<const Rat> x) const {
  if (rblocks_.empty()) throw StructuralError("hhom: no rational blocks for exact apply");
  const auto& sg = source_.gradation();
  const auto& tg = target_.gradation();
  std::vector<Rat> out(tg.total_dim(), Rat(0));
  for (int i = 1; i <= std::min(sg.step(), tg.step()); ++i) {
    const auto& b = rblocks_[i - 1];
    const int so = sg.layer_offset(i);
    const int to = tg.layer_offset(i);
    for (std::size_t r = 0; r < b.size(); ++r) {
      Rat acc(0);
      for (std::size_t c = 0; c < b[r].size(); ++c) acc += b[r][c] * x[so + c];
      out[to + r] = acc;
    }
  }
  return out;
}

Eigen::MatrixXd HHomomorphism::coordinate_matrix() const {
  const auto& sg = source_.gradation();
  const auto& tg = target_.gradation();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(tg.total_dim(), sg.total_dim());
  for (int i = 1; i <= std::min(sg.step(), tg.step()); ++i) {
    if (blocks_[i - 1].size() == 0) continue;
    m.block(tg.layer_offset(i), sg.layer_offset(i), tg.layer_dim(i), sg.layer_dim(i)) =
        blocks_[i - 1];
  }
  return m;
}

double HHomomorphism::lipschitz_bound() const {
  const auto& sg = source_.gradation();
  const auto& tg = target_.gradation();
  double best = 0.0;
  for (int i = 1; i <= sg.step(); ++i) {
    if (i > tg.step()) continue;
    const auto& b = blocks_[i - 1];
    if (b.size() == 0) continue;
    const auto skind = source_.norm.layer_norms()[i - 1].kind;
    const auto tkind = target_.norm.layer_norms()[i - 1].kind;
    double op;
    if (skind == LayerNormKind::Euclidean && tkind == LayerNormKind::Euclidean) {
      op = Eigen::JacobiSVD<Eigen::MatrixXd>(b).singularValues()(0);
    } else {
      // Generic layer norms: ascent over the source layer sphere.
      Rng rng(0x11CE, "hhom_lip_layer" + std::to_string(i));
      const int nc = static_cast<int>(b.cols());
      op = 0.0;
      std::vector<double> probe(sg.total_dim(), 0.0);
      std::vector<double> timg(tg.total_dim(), 0.0);
      auto val = [&](const std::vector<double>& w) {
        for (int c = 0; c < nc; ++c) probe[sg.layer_offset(i) + c] = w[c];
        const double nv = source_.norm.layer_value(i, probe);
        if (nv < 1e-12) return 0.0;
        std::fill(timg.begin(), timg.end(), 0.0);
        for (int r = 0; r < b.rows(); ++r) {
          double acc = 0.0;
          for (int c = 0; c < nc; ++c) acc += b(r, c) * w[c];
          timg[tg.layer_offset(i) + r] = acc;
        }
        return target_.norm.layer_value(i, timg) / nv;
      };
      for (int restart = 0; restart < 64; ++restart) {
        std::vector<double> v = rng.uniform_vec(nc, -1.0, 1.0);
        double cur = val(v);
        double step = 0.5;
        for (int it = 0; it < 200 && step > 1e-9; ++it) {
          auto w = v;
          for (int c = 0; c < nc; ++c) w[c] += step * rng.uniform(-1.0, 1.0);
          const double r = val(w);
          if (r > cur) {
            cur = r;
            v = std::move(w);
          } else {
            step *= 0.9;
          }
        }
        op = std::max(op, cur);
      }
      op *= 1.0 + 1e-9;
    }
    const double term =
        target_.norm.sigmas()[i - 1] * kth_root(op, i) / source_.norm.sigmas()[i - 1];
    best = std::max(best, term);
  }
  return best;
}

HHomValidation HHomomorphism::validate(int random_pairs, std::uint64_t seed) const {
  HHomValidation out;
  const auto& sg = source_.gradation();
  const int n = sg.total_dim();
  out.exact = has_rational_blocks();

  // L([e_a, e_b]) = [L e_a, L e_b] on every source basis pair.
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      double defect = 0.0;
      if (out.exact) {
        std::vector<Rat> ea(n, Rat(0)), eb(n, Rat(0));
        ea[a] = 1;
        eb[b] = 1;
        const auto lhs = apply(std::span<const Rat>(bracket<Rat>(source_.sc, ea, eb)));
        const auto rhs = bracket<Rat>(target_.sc, apply(std::span<const Rat>(ea)),
                                      apply(std::span<const Rat>(eb)));
        for (std::size_t t = 0; t < lhs.size(); ++t)
          defect = std::max(defect, std::fabs(to_double(lhs[t] - rhs[t])));
      } else {
        std::vector<double> ea(n, 0.0), eb(n, 0.0);
        ea[a] = 1.0;
        eb[b] = 1.0;
        const auto lhs = apply(std::span<const double>(bracket<double>(source_.sc, ea, eb)));
        const auto rhs = bracket<double>(target_.sc, apply(std::span<const double>(ea)),
                                         apply(std::span<const double>(eb)));
        for (std::size_t t = 0; t < lhs.size(); ++t)
          defect = std::max(defect, std::fabs(lhs[t] - rhs[t]));
      }
      if (defect > out.bracket_defect) {
        out.bracket_defect = defect;
        out.witness = {a, b};
      }
    }
  }

  // Float cross-check of L(xy) = L(x) L(y) on random pairs.
  Rng rng(seed, "hhom_validate");
  const auto hw = ball_box_halfwidths(source_.norm, 1.0);
  for (int k = 0; k < random_pairs; ++k) {
    std::vector<double> x(n), y(n);
    for (int t = 0; t < n; ++t) {
      x[t] = rng.uniform(-hw[t], hw[t]);
      y[t] = rng.uniform(-hw[t], hw[t]);
    }
    const auto lhs = apply(std::span<const double>(multiply<double>(source_.sc, x, y)));
    const auto rhs = multiply<double>(target_.sc, apply(std::span<const double>(x)),
                                      apply(std::span<const double>(y)));
    out.multiply_defect =
        std::max(out.multiply_defect, target_.norm.value(group_diff<double>(target_.sc, lhs, rhs)));
  }
  return out;
}

HHomomorphism hhom_identity(const GroupBundle& g) {
  std::vector<RatMatrix> blocks;
  for (int i = 1; i <= g.step(); ++i) {
    const int d = g.gradation().layer_dim(i);
    RatMatrix m(d, std::vector<Rat>(d, Rat(0)));
    for (int r = 0; r < d; ++r) m[r][r] = 1;
    blocks.push_back(std::move(m));
  }
  return HHomomorphism(g, g, blocks);
}

HHomomorphism hhom_dilation(const GroupBundle& g, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("hhom_dilation: lambda must be positive");
  std::vector<Eigen::MatrixXd> blocks;
  double scale = 1.0;
  for (int i = 1; i <= g.step(); ++i) {
    scale *= lambda;
    const int d = g.gradation().layer_dim(i);
    blocks.push_back(scale * Eigen::MatrixXd::Identity(d, d));
  }
  return HHomomorphism(g, g, std::move(blocks));
}

HHomomorphism hhom_heisenberg_diag(double a) {
  if (a == 0.0) throw std::invalid_argument("hhom_heisenberg_diag: a must be nonzero");
  const auto& h = make_heisenberg();
  Eigen::MatrixXd l1(2, 2);
  l1 << a, 0.0, 0.0, 1.0 / a;
  return HHomomorphism(h, h,
                       std::vector<Eigen::MatrixXd>{l1, Eigen::MatrixXd::Identity(1, 1)});
}

HHomomorphism hhom_heisenberg_rotation(double theta) {
  const auto& h = make_heisenberg();
  Eigen::MatrixXd l1(2, 2);
  l1 << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return HHomomorphism(h, h,
                       std::vector<Eigen::MatrixXd>{l1, Eigen::MatrixXd::Identity(1, 1)});
}

HHomomorphism hhom_layer1_projection(const GroupBundle& source) {
  const int n1 = source.gradation().layer_dim(1);
  auto target =
      make_abelian(n1, source.norm.layer_norms()[0].kind, source.norm.layer_norms()[0].p);
  std::vector<Eigen::MatrixXd> blocks;
  blocks.push_back(Eigen::MatrixXd::Identity(n1, n1));
  for (int i = 2; i <= source.step(); ++i) blocks.emplace_back();
  return HHomomorphism(source, std::move(target), std::move(blocks));
}

}  // namespace carnot
