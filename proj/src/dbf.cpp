#include "fog/dbf.hpp"

#include <cmath>
#include <unordered_map>

namespace fog {

namespace {

void check_inputs(const ScalarMap& t_hat, const LabImage& lab, const SemanticLabeling& labels,
                  const FilterParams& params) {
  params.validate();
  require_same_shape(t_hat.height(), t_hat.width(), lab.height(), lab.width(), "dbf");
  require_same_shape(t_hat.height(), t_hat.width(), labels.height(), labels.width(), "dbf");
  if (!t_hat.fully_valid())
    throw std::invalid_argument("dbf: transmittance input must be fully valid");
}

std::vector<Scalar> gaussian_taps(Scalar sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<Scalar> taps(static_cast<size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i)
    taps[static_cast<size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
  return taps;
}

}  // namespace

ScalarMap dbf_direct(const ScalarMap& t_hat, const LabImage& lab, const SemanticLabeling& labels,
                     const FilterParams& params) {
  check_inputs(t_hat, lab, labels, params);

  const Eigen::Index h = t_hat.height(), w = t_hat.width();
  const int r = params.effective_radius();
  const double inv2ss = 0.5 / (params.sigma_s * params.sigma_s);
  const double inv2sc = 0.5 / (params.sigma_c * params.sigma_c);

  ArrayXX spatial(2 * r + 1, 2 * r + 1);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      spatial(dy + r, dx + r) = std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) * inv2ss);

  ScalarMap out(h, w);
  for (Eigen::Index px = 0; px < w; ++px) {
    for (Eigen::Index py = 0; py < h; ++py) {
      const int lp = labels.ids(py, px);
      const double Lp = lab.L(py, px), ap = lab.a(py, px), bp = lab.b(py, px);
      double num = 0.0, den = 0.0;
      const Eigen::Index y0 = std::max<Eigen::Index>(0, py - r);
      const Eigen::Index y1 = std::min<Eigen::Index>(h - 1, py + r);
      const Eigen::Index x0 = std::max<Eigen::Index>(0, px - r);
      const Eigen::Index x1 = std::min<Eigen::Index>(w - 1, px + r);
      for (Eigen::Index qx = x0; qx <= x1; ++qx) {
        for (Eigen::Index qy = y0; qy <= y1; ++qy) {
          const double ws = spatial(qy - py + r, qx - px + r);
          const double dL = lab.L(qy, qx) - Lp;
          const double da = lab.a(qy, qx) - ap;
          const double db = lab.b(qy, qx) - bp;
          const double wc = std::exp(-(dL * dL + da * da + db * db) * inv2sc);
          const double delta = labels.ids(qy, qx) == lp ? 1.0 : 0.0;
          const double wgt = ws * (delta + params.mu * wc);
          num += wgt * t_hat.values(qy, qx);
          den += wgt;
        }
      }
      out.values(py, px) = num / den;
    }
  }
  return out;
}

// ---- BilateralGrid ----------------------------------------------------------

BilateralGrid::BilateralGrid(std::vector<Eigen::Index> dims, std::vector<Scalar> cell_sizes)
    : dims_(std::move(dims)), cells_(std::move(cell_sizes)) {
  if (dims_.empty() || dims_.size() != cells_.size())
    throw std::invalid_argument("grid: dims/cell sizes mismatch");
  strides_.resize(dims_.size());
  Eigen::Index total = 1;
  for (size_t a = 0; a < dims_.size(); ++a) {
    if (dims_[a] < 1 || !(cells_[a] > 0)) throw std::invalid_argument("grid: bad axis");
    strides_[a] = total;
    total *= dims_[a];
  }
  num_.assign(static_cast<size_t>(total), 0.0);
  den_.assign(static_cast<size_t>(total), 0.0);
}

Eigen::Index BilateralGrid::flat(const std::vector<Eigen::Index>& idx) const {
  Eigen::Index f = 0;
  for (size_t a = 0; a < dims_.size(); ++a) f += idx[a] * strides_[a];
  return f;
}

void BilateralGrid::splat(const std::vector<Scalar>& pos, Scalar value, Scalar weight) {
  const int d = dimensionality();
  std::vector<Eigen::Index> base(static_cast<size_t>(d));
  std::vector<Scalar> frac(static_cast<size_t>(d));
  for (int a = 0; a < d; ++a) {
    const Scalar p = pos[static_cast<size_t>(a)];
    auto i = static_cast<Eigen::Index>(std::floor(p));
    i = std::max<Eigen::Index>(0, std::min(dims_[static_cast<size_t>(a)] - 2, i));
    base[static_cast<size_t>(a)] = i;
    frac[static_cast<size_t>(a)] = p - static_cast<Scalar>(i);
  }
  const int corners = 1 << d;
  std::vector<Eigen::Index> idx(static_cast<size_t>(d));
  for (int c = 0; c < corners; ++c) {
    Scalar wgt = weight;
    for (int a = 0; a < d; ++a) {
      const bool hi = (c >> a) & 1;
      wgt *= hi ? frac[static_cast<size_t>(a)] : (1.0 - frac[static_cast<size_t>(a)]);
      idx[static_cast<size_t>(a)] = base[static_cast<size_t>(a)] + (hi ? 1 : 0);
    }
    const auto f = static_cast<size_t>(flat(idx));
    num_[f] += wgt * value;
    den_[f] += wgt;
  }
}

void BilateralGrid::blur(const std::vector<Scalar>& sigmas) {
  if (sigmas.size() != dims_.size()) throw std::invalid_argument("grid: sigma count mismatch");
  const auto total = static_cast<Eigen::Index>(num_.size());

  std::vector<Scalar> line_in, line_out;
  for (size_t a = 0; a < dims_.size(); ++a) {
    if (dims_[a] == 1) continue;
    const auto taps = gaussian_taps(sigmas[a]);
    const int radius = static_cast<int>(taps.size() / 2);
    const Eigen::Index d = dims_[a];
    const Eigen::Index stride = strides_[a];
    line_in.resize(static_cast<size_t>(d));
    line_out.resize(static_cast<size_t>(d));

    for (std::vector<Scalar>* channel : {&num_, &den_}) {
      // Walk every 1-D line along axis a: bases are all flat indices whose
      // a-th coordinate is zero.
      for (Eigen::Index outer = 0; outer < total / d; ++outer) {
        const Eigen::Index block = outer / stride;
        const Eigen::Index within = outer % stride;
        const Eigen::Index base = block * stride * d + within;
        for (Eigen::Index i = 0; i < d; ++i)
          line_in[static_cast<size_t>(i)] = (*channel)[static_cast<size_t>(base + i * stride)];
        for (Eigen::Index i = 0; i < d; ++i) {
          Scalar acc = 0;
          const Eigen::Index j0 = std::max<Eigen::Index>(0, i - radius);
          const Eigen::Index j1 = std::min<Eigen::Index>(d - 1, i + radius);
          for (Eigen::Index j = j0; j <= j1; ++j)
            acc += taps[static_cast<size_t>(j - i + radius)] * line_in[static_cast<size_t>(j)];
          line_out[static_cast<size_t>(i)] = acc;
        }
        for (Eigen::Index i = 0; i < d; ++i)
          (*channel)[static_cast<size_t>(base + i * stride)] = line_out[static_cast<size_t>(i)];
      }
    }
  }
}

std::pair<Scalar, Scalar> BilateralGrid::slice(const std::vector<Scalar>& pos) const {
  const int d = dimensionality();
  std::vector<Eigen::Index> base(static_cast<size_t>(d));
  std::vector<Scalar> frac(static_cast<size_t>(d));
  for (int a = 0; a < d; ++a) {
    const Scalar p = pos[static_cast<size_t>(a)];
    auto i = static_cast<Eigen::Index>(std::floor(p));
    i = std::max<Eigen::Index>(0, std::min(dims_[static_cast<size_t>(a)] - 2, i));
    base[static_cast<size_t>(a)] = i;
    frac[static_cast<size_t>(a)] = p - static_cast<Scalar>(i);
  }
  const int corners = 1 << d;
  std::vector<Eigen::Index> idx(static_cast<size_t>(d));
  Scalar num = 0, den = 0;
  for (int c = 0; c < corners; ++c) {
    Scalar wgt = 1.0;
    for (int a = 0; a < d; ++a) {
      const bool hi = (c >> a) & 1;
      wgt *= hi ? frac[static_cast<size_t>(a)] : (1.0 - frac[static_cast<size_t>(a)]);
      idx[static_cast<size_t>(a)] = base[static_cast<size_t>(a)] + (hi ? 1 : 0);
    }
    const auto f = static_cast<size_t>(flat(idx));
    num += wgt * num_[f];
    den += wgt * den_[f];
  }
  return {num, den};
}

// ---- grid filter ------------------------------------------------------------

ScalarMap dbf_grid(const ScalarMap& t_hat, const LabImage& lab, const SemanticLabeling& labels,
                   const FilterParams& params, const GridConfig& grid) {
  check_inputs(t_hat, lab, labels, params);

  const Eigen::Index h = t_hat.height(), w = t_hat.width();
  const Scalar cs = grid.spatial(params);
  const Scalar cr = grid.range(params);
  const Scalar sg_s = params.sigma_s / cs;  // blur sigma in grid units
  const Scalar sg_c = params.sigma_c / cr;

  const auto spatial_dim = [&](Eigen::Index extent) {
    return static_cast<Eigen::Index>(std::floor(static_cast<Scalar>(extent - 1) / cs)) + 3;
  };

  // Semantic term: one 2D spatial grid per label present; the label axis of
  // the conceptual 3D grid carries no blur, so slices are independent.
  std::unordered_map<int, BilateralGrid> sem;
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      const int id = labels.ids(y, x);
      auto it = sem.find(id);
      if (it == sem.end()) {
        it = sem.emplace(id, BilateralGrid({spatial_dim(h), spatial_dim(w)}, {cs, cs})).first;
      }
      it->second.splat({y / cs + 1, x / cs + 1}, t_hat.values(y, x));
    }
  }
  for (auto& [id, g] : sem) g.blur({sg_s, sg_s});

  ScalarMap out(h, w);
  ArrayXX num(h, w), den(h, w);
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      const auto [n3, d3] = sem.at(labels.ids(y, x)).slice({y / cs + 1, x / cs + 1});
      num(y, x) = n3;
      den(y, x) = d3;
    }
  }

  if (params.mu > 0) {
    const Scalar Lmin = lab.L.minCoeff(), amin = lab.a.minCoeff(), bmin = lab.b.minCoeff();
    const auto range_dim = [&](Scalar lo, Scalar hi) {
      return static_cast<Eigen::Index>(std::floor((hi - lo) / cr)) + 3;
    };
    BilateralGrid color({spatial_dim(h), spatial_dim(w), range_dim(Lmin, lab.L.maxCoeff()),
                         range_dim(amin, lab.a.maxCoeff()), range_dim(bmin, lab.b.maxCoeff())},
                        {cs, cs, cr, cr, cr});
    std::vector<Scalar> pos(5);
    for (Eigen::Index x = 0; x < w; ++x) {
      for (Eigen::Index y = 0; y < h; ++y) {
        pos[0] = y / cs + 1;
        pos[1] = x / cs + 1;
        pos[2] = (lab.L(y, x) - Lmin) / cr + 1;
        pos[3] = (lab.a(y, x) - amin) / cr + 1;
        pos[4] = (lab.b(y, x) - bmin) / cr + 1;
        color.splat(pos, t_hat.values(y, x));
      }
    }
    color.blur({sg_s, sg_s, sg_c, sg_c, sg_c});
    for (Eigen::Index x = 0; x < w; ++x) {
      for (Eigen::Index y = 0; y < h; ++y) {
        pos[0] = y / cs + 1;
        pos[1] = x / cs + 1;
        pos[2] = (lab.L(y, x) - Lmin) / cr + 1;
        pos[3] = (lab.a(y, x) - amin) / cr + 1;
        pos[4] = (lab.b(y, x) - bmin) / cr + 1;
        const auto [n5, d5] = color.slice(pos);
        num(y, x) += params.mu * n5;
        den(y, x) += params.mu * d5;
      }
    }
  }

  out.values = num / den;
  return out;
}

}  // namespace fog
