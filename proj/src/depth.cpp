#include "fog/depth.hpp"

#include "fog/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace fog {

namespace {

double median_inplace(std::vector<double>& v) {
  const size_t n = v.size();
  auto mid = v.begin() + n / 2;
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (n % 2 == 0) {
    auto lo = std::max_element(v.begin(), mid);
    m = 0.5 * (m + *lo);
  }
  return m;
}

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t h = seed ^ (salt * 0x9e3779b97f4a7c15ull);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

}  // namespace

CameraModel read_camera(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  CameraModel cam;
  cam.focal_length_px = j.at("focal_length_px").get<double>();
  cam.baseline_m = j.at("baseline_m").get<double>();
  if (j.contains("principal_point")) {
    cam.principal_point[0] = j["principal_point"][0].get<double>();
    cam.principal_point[1] = j["principal_point"][1].get<double>();
  }
  cam.validate();
  return cam;
}

void write_camera(const std::string& path, const CameraModel& cam) {
  nlohmann::json j;
  j["focal_length_px"] = cam.focal_length_px;
  j["baseline_m"] = cam.baseline_m;
  j["principal_point"] = {cam.principal_point[0], cam.principal_point[1]};
  write_text_file(path, j.dump(2) + "\n");
}

ScalarMap detect_outliers(const ScalarMap& disparity, const SuperpixelPartition& partition) {
  require_same_shape(disparity.height(), disparity.width(), partition.height(),
                     partition.width(), "detect_outliers");

  ScalarMap out = disparity;

  struct Candidate {
    double deviation;
    Eigen::Index y, x;
  };

  std::vector<std::vector<Eigen::Index>> members_y(partition.k), members_x(partition.k);
  for (Eigen::Index x = 0; x < disparity.width(); ++x) {
    for (Eigen::Index y = 0; y < disparity.height(); ++y) {
      if (!disparity.valid(y, x)) continue;
      const int sp = partition.assignment(y, x);
      members_y[sp].push_back(y);
      members_x[sp].push_back(x);
    }
  }

  std::vector<double> vals, devs;
  for (int sp = 0; sp < partition.k; ++sp) {
    const size_t n = members_y[sp].size();
    if (n < 2) continue;

    vals.clear();
    for (size_t i = 0; i < n; ++i)
      vals.push_back(disparity.values(members_y[sp][i], members_x[sp][i]));
    std::vector<double> tmp = vals;
    const double med = median_inplace(tmp);

    devs.clear();
    for (double v : vals) devs.push_back(std::abs(v - med));
    tmp = devs;
    const double mad = median_inplace(tmp);

    std::vector<Candidate> candidates;
    for (size_t i = 0; i < n; ++i)
      if (devs[i] > 3.0 * mad)
        candidates.push_back({devs[i], members_y[sp][i], members_x[sp][i]});

    // Cap at half of the initially valid pixels, worst deviations first.
    const size_t cap = n / 2;
    if (candidates.size() > cap) {
      std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.deviation != b.deviation) return a.deviation > b.deviation;
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
      });
      candidates.resize(cap);
    }
    for (const auto& c : candidates) out.valid(c.y, c.x) = false;
  }
  return out;
}

SuperpixelPartition slic(const LabImage& lab, const SlicParams& params) {
  const Eigen::Index h = lab.height(), w = lab.width();
  const Eigen::Index n = h * w;
  int k = params.k > 0 ? params.k : static_cast<int>(std::max<Eigen::Index>(1, n / 1024));
  if (k > n) throw std::invalid_argument("slic: k exceeds pixel count");
  if (!(params.compactness > 0)) throw std::invalid_argument("slic: compactness must be > 0");

  SuperpixelPartition part;
  part.assignment = ArrayXXi::Zero(h, w);
  if (k == 1) {
    part.k = 1;
    return part;
  }

  const double grid_interval = std::sqrt(static_cast<double>(n) / k);

  // Seed layout: nx * ny <= k, aspect matched to the image.
  int ny = std::max(1, static_cast<int>(std::lround(std::sqrt(
                           static_cast<double>(k) * h / static_cast<double>(w)))));
  ny = std::min<int>(ny, k);
  int nx = std::max(1, k / ny);
  while (static_cast<Eigen::Index>(nx) > w) {
    --nx;
  }
  while (static_cast<Eigen::Index>(ny) > h) {
    --ny;
  }

  struct Center {
    double y, x, L, a, b;
  };
  std::vector<Center> centers;
  centers.reserve(static_cast<size_t>(nx) * ny);
  const double sx = static_cast<double>(w) / nx;
  const double sy = static_cast<double>(h) / ny;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      auto cy = static_cast<Eigen::Index>(sy * (j + 0.5));
      auto cx = static_cast<Eigen::Index>(sx * (i + 0.5));
      cy = std::min(cy, h - 1);
      cx = std::min(cx, w - 1);
      centers.push_back({static_cast<double>(cy), static_cast<double>(cx), lab.L(cy, cx),
                         lab.a(cy, cx), lab.b(cy, cx)});
    }
  }
  const int kc = static_cast<int>(centers.size());

  const double spatial_scale = params.compactness / grid_interval;
  const auto half_x = static_cast<Eigen::Index>(std::ceil(std::max(2.0 * grid_interval, sx)));
  const auto half_y = static_cast<Eigen::Index>(std::ceil(std::max(2.0 * grid_interval, sy)));

  ArrayXXi assign = ArrayXXi::Constant(h, w, -1);
  ArrayXX best = ArrayXX::Constant(h, w, std::numeric_limits<double>::infinity());

  for (int iter = 0; iter < 10; ++iter) {
    best.setConstant(std::numeric_limits<double>::infinity());
    assign.setConstant(-1);

    for (int c = 0; c < kc; ++c) {
      const auto& ct = centers[c];
      const auto y0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(ct.y) - half_y);
      const auto y1 = std::min<Eigen::Index>(h - 1, static_cast<Eigen::Index>(ct.y) + half_y);
      const auto x0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(ct.x) - half_x);
      const auto x1 = std::min<Eigen::Index>(w - 1, static_cast<Eigen::Index>(ct.x) + half_x);
      for (Eigen::Index x = x0; x <= x1; ++x) {
        for (Eigen::Index y = y0; y <= y1; ++y) {
          const double dl = lab.L(y, x) - ct.L;
          const double da = lab.a(y, x) - ct.a;
          const double db = lab.b(y, x) - ct.b;
          const double dy = (y - ct.y) * spatial_scale;
          const double dx = (x - ct.x) * spatial_scale;
          const double d2 = dl * dl + da * da + db * db + dy * dy + dx * dx;
          if (d2 < best(y, x)) {
            best(y, x) = d2;
            assign(y, x) = c;
          }
        }
      }
    }

    // Stragglers outside every window: nearest center by full scan.
    for (Eigen::Index x = 0; x < w; ++x) {
      for (Eigen::Index y = 0; y < h; ++y) {
        if (assign(y, x) >= 0) continue;
        double bd = std::numeric_limits<double>::infinity();
        int bc = 0;
        for (int c = 0; c < kc; ++c) {
          const double dy = y - centers[c].y;
          const double dx = x - centers[c].x;
          const double d2 = dy * dy + dx * dx;
          if (d2 < bd) {
            bd = d2;
            bc = c;
          }
        }
        assign(y, x) = bc;
      }
    }

    std::vector<Center> acc(kc, {0, 0, 0, 0, 0});
    std::vector<Eigen::Index> counts(kc, 0);
    for (Eigen::Index x = 0; x < w; ++x) {
      for (Eigen::Index y = 0; y < h; ++y) {
        auto& a = acc[assign(y, x)];
        a.y += y;
        a.x += x;
        a.L += lab.L(y, x);
        a.a += lab.a(y, x);
        a.b += lab.b(y, x);
        ++counts[assign(y, x)];
      }
    }
    for (int c = 0; c < kc; ++c) {
      if (counts[c] == 0) continue;  // keep previous center
      const double inv = 1.0 / counts[c];
      centers[c] = {acc[c].y * inv, acc[c].x * inv, acc[c].L * inv, acc[c].a * inv,
                    acc[c].b * inv};
    }
  }

  // Connectivity: relabel 4-connected components, absorbing fragments smaller
  // than a quarter of the nominal superpixel area into an adjacent component.
  const auto min_size = std::max<Eigen::Index>(1, (n / k) / 4);
  ArrayXXi labels = ArrayXXi::Constant(h, w, -1);
  std::vector<Eigen::Index> stack, component;
  std::vector<Eigen::Index> comp_size;
  int next = 0;
  for (Eigen::Index x0 = 0; x0 < w; ++x0) {
    for (Eigen::Index y0 = 0; y0 < h; ++y0) {
      if (labels(y0, x0) >= 0) continue;
      const int orig = assign(y0, x0);
      int adjacent = -1;
      component.clear();
      stack.assign(1, y0 * w + x0);
      labels(y0, x0) = next;
      while (!stack.empty()) {
        const Eigen::Index p = stack.back();
        stack.pop_back();
        component.push_back(p);
        const Eigen::Index y = p / w, x = p % w;
        const Eigen::Index ns[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
        for (const auto& nb : ns) {
          if (nb[0] < 0 || nb[0] >= h || nb[1] < 0 || nb[1] >= w) continue;
          const int l = labels(nb[0], nb[1]);
          if (l < 0 && assign(nb[0], nb[1]) == orig) {
            labels(nb[0], nb[1]) = next;
            stack.push_back(nb[0] * w + nb[1]);
          } else if (l >= 0 && l != next) {
            adjacent = l;
          }
        }
      }
      if (static_cast<Eigen::Index>(component.size()) < min_size && adjacent >= 0) {
        for (Eigen::Index p : component) labels(p / w, p % w) = adjacent;
        comp_size[adjacent] += static_cast<Eigen::Index>(component.size());
      } else {
        comp_size.push_back(static_cast<Eigen::Index>(component.size()));
        ++next;
      }
    }
  }

  // Merge smallest components until the count honors k' <= k.
  while (next > k) {
    int smallest = 0;
    for (int c = 1; c < next; ++c)
      if (comp_size[c] < comp_size[smallest]) smallest = c;

    std::vector<Eigen::Index> border_len(next, 0);
    for (Eigen::Index x = 0; x < w; ++x) {
      for (Eigen::Index y = 0; y < h; ++y) {
        if (labels(y, x) != smallest) continue;
        const Eigen::Index ns[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
        for (const auto& nb : ns) {
          if (nb[0] < 0 || nb[0] >= h || nb[1] < 0 || nb[1] >= w) continue;
          const int l = labels(nb[0], nb[1]);
          if (l != smallest) ++border_len[l];
        }
      }
    }
    int target = -1;
    for (int c = 0; c < next; ++c)
      if (c != smallest && border_len[c] > 0 && (target < 0 || border_len[c] > border_len[target]))
        target = c;
    if (target < 0) break;  // isolated; cannot happen on a connected raster

    for (Eigen::Index x = 0; x < w; ++x)
      for (Eigen::Index y = 0; y < h; ++y)
        if (labels(y, x) == smallest) labels(y, x) = target;
    comp_size[target] += comp_size[smallest];

    // Compact: move the last label into the vacated slot.
    const int last = next - 1;
    if (smallest != last) {
      for (Eigen::Index x = 0; x < w; ++x)
        for (Eigen::Index y = 0; y < h; ++y)
          if (labels(y, x) == last) labels(y, x) = smallest;
      comp_size[smallest] = comp_size[last];
    }
    comp_size.pop_back();
    --next;
  }

  part.assignment = labels;
  part.k = next;
  return part;
}

std::vector<PlaneFit> fit_planes(const ScalarMap& disparity,
                                 const SuperpixelPartition& partition,
                                 const RansacParams& params) {
  require_same_shape(disparity.height(), disparity.width(), partition.height(),
                     partition.width(), "fit_planes");
  if (params.iters < 1) throw std::invalid_argument("fit_planes: iters must be >= 1");
  if (!(params.inlier_tol > 0)) throw std::invalid_argument("fit_planes: inlier_tol must be > 0");

  const Eigen::Index w = disparity.width();
  std::vector<std::vector<Eigen::Index>> members(partition.k);
  for (Eigen::Index x = 0; x < w; ++x)
    for (Eigen::Index y = 0; y < disparity.height(); ++y)
      if (disparity.valid(y, x)) members[partition.assignment(y, x)].push_back(y * w + x);

  std::vector<PlaneFit> fits(partition.k);

  for (int sp = 0; sp < partition.k; ++sp) {
    const auto& pix = members[sp];
    const auto n = static_cast<Eigen::Index>(pix.size());
    PlaneFit& fit = fits[sp];
    if (n < std::max(3, params.min_inliers)) continue;  // stays degenerate

    Eigen::ArrayXd us(n), vs(n), ds(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      us[i] = static_cast<double>(pix[i] % w);
      vs[i] = static_cast<double>(pix[i] / w);
      ds[i] = disparity.values(pix[i] / w, pix[i] % w);
    }

    std::mt19937_64 rng(mix_seed(params.seed, static_cast<uint64_t>(sp)));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);

    int best_count = -1;
    Eigen::Vector3d best_model = Eigen::Vector3d::Zero();
    for (int it = 0; it < params.iters; ++it) {
      const Eigen::Index i0 = pick(rng), i1 = pick(rng), i2 = pick(rng);
      if (i0 == i1 || i0 == i2 || i1 == i2) continue;
      const double area = (us[i1] - us[i0]) * (vs[i2] - vs[i0]) -
                          (us[i2] - us[i0]) * (vs[i1] - vs[i0]);
      if (std::abs(area) < 1e-9) continue;  // collinear sample

      Eigen::Matrix3d A;
      A << us[i0], vs[i0], 1, us[i1], vs[i1], 1, us[i2], vs[i2], 1;
      const Eigen::Vector3d rhs(ds[i0], ds[i1], ds[i2]);
      const Eigen::Vector3d model = A.partialPivLu().solve(rhs);

      const auto resid = (us * model[0] + vs * model[1] + model[2] - ds).abs();
      const int count = static_cast<int>((resid <= params.inlier_tol).count());
      if (count > best_count) {
        best_count = count;
        best_model = model;
      }
    }
    if (best_count < params.min_inliers) continue;

    auto ls_refit = [&](const std::vector<uint8_t>& keep, Eigen::Index kept) {
      Eigen::MatrixXd A(kept, 3);
      Eigen::VectorXd rhs(kept);
      Eigen::Index row = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!keep[static_cast<size_t>(i)]) continue;
        A(row, 0) = us[i];
        A(row, 1) = vs[i];
        A(row, 2) = 1.0;
        rhs[row] = ds[i];
        ++row;
      }
      return Eigen::Vector3d(A.colPivHouseholderQr().solve(rhs));
    };
    auto select = [&](const Eigen::Vector3d& model, double band, std::vector<uint8_t>& keep) {
      const auto resid = (us * model[0] + vs * model[1] + model[2] - ds).abs();
      Eigen::Index kept = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        keep[static_cast<size_t>(i)] = resid[i] <= band;
        kept += keep[static_cast<size_t>(i)];
      }
      return kept;
    };

    // Least-squares refit on the best inlier set, then a MAD-trimmed polish:
    // gross outliers that happen to fall inside the tolerance band otherwise
    // bias the fit.
    std::vector<uint8_t> keep(static_cast<size_t>(n), 0);
    Eigen::Index kept = select(best_model, params.inlier_tol, keep);
    Eigen::Vector3d model = ls_refit(keep, kept);
    for (int round = 0; round < 3; ++round) {
      const auto resid = (us * model[0] + vs * model[1] + model[2] - ds).abs();
      std::vector<double> in_band;
      for (Eigen::Index i = 0; i < n; ++i)
        if (keep[static_cast<size_t>(i)]) in_band.push_back(resid[i]);
      const double band =
          std::min(params.inlier_tol, std::max(3.0 * median_inplace(in_band), 1e-9));
      std::vector<uint8_t> next(static_cast<size_t>(n), 0);
      const Eigen::Index next_kept = select(model, band, next);
      if (next_kept < std::max<Eigen::Index>(3, params.min_inliers) || next == keep) break;
      keep = std::move(next);
      kept = next_kept;
      model = ls_refit(keep, kept);
    }

    fit.coeffs = model;
    fit.inliers = std::move(keep);
    fit.inlier_count = best_count;  // consensus size from the search; monotone in iters
    fit.status = PlaneFit::Status::Ok;
  }
  return fits;
}

ScalarMap complete_depth(const ScalarMap& disparity, const std::vector<PlaneFit>& fits,
                         const SuperpixelPartition& partition, const CameraModel& camera,
                         const DistanceClamp& clamp) {
  require_same_shape(disparity.height(), disparity.width(), partition.height(),
                     partition.width(), "complete_depth");
  if (static_cast<int>(fits.size()) != partition.k)
    throw std::invalid_argument("complete_depth: fits do not cover all superpixels");
  camera.validate();

  const Eigen::Index h = disparity.height(), w = disparity.width();

  // Centroids over all pixels of each superpixel.
  std::vector<double> cy(partition.k, 0), cx(partition.k, 0);
  std::vector<Eigen::Index> count(partition.k, 0);
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      const int sp = partition.assignment(y, x);
      cy[sp] += y;
      cx[sp] += x;
      ++count[sp];
    }
  }

  std::vector<int> plane_of(partition.k, -1);
  bool any_ok = false;
  for (int sp = 0; sp < partition.k; ++sp) {
    if (fits[sp].status == PlaneFit::Status::Ok) {
      plane_of[sp] = sp;
      any_ok = true;
    }
  }
  if (!any_ok) throw std::runtime_error("complete_depth: no depth support (all fits degenerate)");

  for (int sp = 0; sp < partition.k; ++sp) {
    if (plane_of[sp] >= 0 || count[sp] == 0) continue;
    const double py = cy[sp] / count[sp], px = cx[sp] / count[sp];
    double best = std::numeric_limits<double>::infinity();
    for (int other = 0; other < partition.k; ++other) {
      if (fits[other].status != PlaneFit::Status::Ok || count[other] == 0) continue;
      const double dy = py - cy[other] / count[other];
      const double dx = px - cx[other] / count[other];
      const double d2 = dy * dy + dx * dx;
      if (d2 < best) {
        best = d2;
        plane_of[sp] = other;
      }
    }
  }

  const double fb = camera.focal_length_px * camera.baseline_m;
  ScalarMap dist(h, w);
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      double d = disparity.valid(y, x)
                     ? disparity.values(y, x)
                     : fits[plane_of[partition.assignment(y, x)]].eval(
                           static_cast<double>(x), static_cast<double>(y));
      double l = d > fb / clamp.max_m ? fb / d : clamp.max_m;
      dist.values(y, x) = std::min(clamp.max_m, std::max(clamp.min_m, l));
    }
  }
  return dist;
}

ScalarMap transmittance_from_distance(const ScalarMap& distance, Scalar beta) {
  if (beta < 0) throw std::invalid_argument("transmittance_from_distance: beta must be >= 0");
  ScalarMap t = distance;
  t.values = (-beta * distance.values).exp();
  return t;
}

}  // namespace fog
