// Copyright 2026 The hardneg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hardneg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "hardneg/error.hpp"
#include "hardneg/rng.hpp"

namespace hardneg::geometry {
namespace {

constexpr std::uint64_t kHomographyStream = 0x48;
constexpr std::uint64_t kOffsetStream = 0x49;

Eigen::Matrix3d TranslationMatrix(double tx, double ty) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 2) = tx;
  t(1, 2) = ty;
  return t;
}

// Similarity taking the points to centroid 0 and RMS distance sqrt(2).
Eigen::Matrix3d NormalizingTransform(const std::vector<Point>& pts) {
  Point centroid = Point::Zero();
  for (const Point& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double sq = 0.0;
  for (const Point& p : pts) sq += (p - centroid).squaredNorm();
  const double rms = std::sqrt(sq / static_cast<double>(pts.size()));
  if (rms < 1e-12) throw EstimationError("dlt: all points coincide");
  const double s = std::numbers::sqrt2 / rms;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * centroid.x();
  t(1, 2) = -s * centroid.y();
  return t;
}

Point Transform(const Eigen::Matrix3d& t, const Point& p) {
  return {t(0, 0) * p.x() + t(0, 2), t(1, 1) * p.y() + t(1, 2)};
}

double TwiceArea(const Point& a, const Point& b, const Point& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool HasCollinearTriple(const std::vector<Point>& pts) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        if (std::abs(TwiceArea(pts[i], pts[j], pts[k])) < 1e-8) return true;
      }
    }
  }
  return false;
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& m) {
  if (!m.allFinite() || std::abs(m(2, 2)) < 1e-12) {
    throw EstimationError("homography: m(2,2) vanishes or entries are not finite");
  }
  m_ = m / m(2, 2);
  if (std::abs(m_.determinant()) <= 1e-12) {
    throw EstimationError("homography: matrix is singular");
  }
}

Homography Homography::Translation(double tx, double ty) {
  return Homography(TranslationMatrix(tx, ty));
}

Point Homography::Apply(const Point& p) const {
  const double w = m_(2, 0) * p.x() + m_(2, 1) * p.y() + m_(2, 2);
  if (std::abs(w) < 1e-12) {
    throw EstimationError("homography: point maps to infinity");
  }
  return {(m_(0, 0) * p.x() + m_(0, 1) * p.y() + m_(0, 2)) / w,
          (m_(1, 0) * p.x() + m_(1, 1) * p.y() + m_(1, 2)) / w};
}

std::array<double, 9> Homography::RowMajor() const {
  std::array<double, 9> out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[r * 3 + c] = m_(r, c);
  }
  return out;
}

void Validate(const HomographyConfig& cfg) {
  std::string problems;
  if (!(cfg.max_translation_frac >= 0.0 && cfg.max_translation_frac <= 0.5)) {
    problems += " max_translation_frac must lie in [0, 0.5];";
  }
  if (!(cfg.max_rotation_deg >= 0.0)) problems += " max_rotation_deg must be >= 0;";
  if (!(cfg.scale_lo > 0.0 && cfg.scale_lo <= cfg.scale_hi)) {
    problems += " scale range must satisfy 0 < lo <= hi;";
  }
  if (!(cfg.perspective_amplitude >= 0.0 && cfg.perspective_amplitude < 0.5)) {
    problems += " perspective_amplitude must lie in [0, 0.5);";
  }
  if (!problems.empty()) throw ValidationError("homography config:" + problems);
}

Homography ComposeHomography(const WarpParams& p, int crop_w, int crop_h) {
  const double cx = crop_w / 2.0;
  const double cy = crop_h / 2.0;
  const double theta = p.rotation_deg * std::numbers::pi / 180.0;
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  rot(0, 0) = std::cos(theta);
  rot(0, 1) = -std::sin(theta);
  rot(1, 0) = std::sin(theta);
  rot(1, 1) = std::cos(theta);
  Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
  scale(0, 0) = p.scale;
  scale(1, 1) = p.scale;
  Eigen::Matrix3d persp = Eigen::Matrix3d::Identity();
  persp(2, 0) = p.perspective_x;
  persp(2, 1) = p.perspective_y;
  return Homography(TranslationMatrix(cx, cy) * TranslationMatrix(p.tx, p.ty) *
                    rot * scale * persp * TranslationMatrix(-cx, -cy));
}

Homography SampleHomography(const HomographyConfig& cfg, int crop_w,
                            int crop_h, std::uint64_t seed) {
  Validate(cfg);
  CounterRng rng(seed, kHomographyStream);
  WarpParams p;
  const double f = cfg.max_translation_frac;
  p.tx = rng.Uniform(-f, f) * crop_w;
  p.ty = rng.Uniform(-f, f) * crop_h;
  p.rotation_deg = rng.Uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
  p.scale = rng.Uniform(cfg.scale_lo, cfg.scale_hi);
  const double a = cfg.perspective_amplitude;
  p.perspective_x = rng.Uniform(-a, a) / crop_w;
  p.perspective_y = rng.Uniform(-a, a) / crop_h;
  return ComposeHomography(p, crop_w, crop_h);
}

template <int C>
imaging::Image<C> WarpImage(const imaging::Image<C>& src, const Homography& h,
                            int out_w, int out_h) {
  const Eigen::Matrix3d inv = h.Inverse().matrix();
  imaging::Image<C> out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double w = inv(2, 0) * x + inv(2, 1) * y + inv(2, 2);
      if (std::abs(w) < 1e-12) continue;
      const double sx = (inv(0, 0) * x + inv(0, 1) * y + inv(0, 2)) / w;
      const double sy = (inv(1, 0) * x + inv(1, 1) * y + inv(1, 2)) / w;
      for (int c = 0; c < C; ++c) out.at(x, y, c) = src.Sample(sx, sy, c);
    }
  }
  return out;
}

template <int C>
imaging::Image<C> Crop(const imaging::Image<C>& src, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || x0 + w > src.width() || y0 + h > src.height()) {
    throw ValidationError("crop window exceeds image bounds");
  }
  imaging::Image<C> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) out.at(x, y, c) = src.at(x0 + x, y0 + y, c);
    }
  }
  return out;
}

template <int C>
CropPairT<imaging::Image<C>> MakePairWith(const imaging::Image<C>& img,
                                          const Homography& h, int crop_size,
                                          int offset_x, int offset_y,
                                          std::int64_t source_image_id) {
  CropPairT<imaging::Image<C>> pair;
  pair.anchor = Crop(img, offset_x, offset_y, crop_size, crop_size);
  const Homography src_to_positive =
      h * Homography::Translation(-offset_x, -offset_y);
  pair.positive = WarpImage(img, src_to_positive, crop_size, crop_size);
  pair.h_ap = h;
  pair.source_image_id = source_image_id;
  pair.offset_x = offset_x;
  pair.offset_y = offset_y;
  return pair;
}

template <int C>
CropPairT<imaging::Image<C>> MakePair(const imaging::Image<C>& img,
                                      const HomographyConfig& cfg,
                                      int crop_size, std::uint64_t seed,
                                      std::int64_t source_image_id) {
  if (crop_size < 16) throw ValidationError("crop size must be at least 16");
  const Homography h = SampleHomography(cfg, crop_size, crop_size, seed);
  const Homography inv = h.Inverse();
  const double last = crop_size - 1;
  double min_x = 0.0, min_y = 0.0, max_x = last, max_y = last;
  for (const Point& corner : {Point(0, 0), Point(last, 0), Point(0, last), Point(last, last)}) {
    const Point p = inv(corner);
    min_x = std::min(min_x, p.x());
    min_y = std::min(min_y, p.y());
    max_x = std::max(max_x, p.x());
    max_y = std::max(max_y, p.y());
  }
  const int lo_x = static_cast<int>(std::ceil(-min_x));
  const int lo_y = static_cast<int>(std::ceil(-min_y));
  const int hi_x = static_cast<int>(std::floor(img.width() - 1 - max_x));
  const int hi_y = static_cast<int>(std::floor(img.height() - 1 - max_y));
  if (lo_x > hi_x || lo_y > hi_y) {
    throw ValidationError("image " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()) +
                          " is too small for a warped crop of " +
                          std::to_string(crop_size) + " px");
  }
  CounterRng rng(seed, kOffsetStream);
  const int ox = lo_x + static_cast<int>(rng.Below(static_cast<std::uint64_t>(hi_x - lo_x + 1)));
  const int oy = lo_y + static_cast<int>(rng.Below(static_cast<std::uint64_t>(hi_y - lo_y + 1)));
  return MakePairWith(img, h, crop_size, ox, oy, source_image_id);
}

#define HARDNEG_INSTANTIATE(C)                                                 \
  template imaging::Image<C> WarpImage(const imaging::Image<C>&,              \
                                       const Homography&, int, int);          \
  template imaging::Image<C> Crop(const imaging::Image<C>&, int, int, int,    \
                                  int);                                       \
  template CropPairT<imaging::Image<C>> MakePairWith(                         \
      const imaging::Image<C>&, const Homography&, int, int, int,             \
      std::int64_t);                                                          \
  template CropPairT<imaging::Image<C>> MakePair(                             \
      const imaging::Image<C>&, const HomographyConfig&, int, std::uint64_t,  \
      std::int64_t);
HARDNEG_INSTANTIATE(1)
HARDNEG_INSTANTIATE(3)
#undef HARDNEG_INSTANTIATE

CorrespondenceSet ReprojectKeypoints(const std::vector<imaging::Keypoint>& kps,
                                     const Homography& h, int width, int height,
                                     double border_margin) {
  CorrespondenceSet out;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    const Point a(kps[i].x, kps[i].y);
    Point p;
    try {
      p = h(a);
    } catch (const EstimationError&) {
      continue;
    }
    if (p.x() >= border_margin && p.x() <= width - 1 - border_margin &&
        p.y() >= border_margin && p.y() <= height - 1 - border_margin) {
      out.pairs.push_back({a, p, i});
    }
  }
  return out;
}

namespace {

template <typename M>
void FillDltRows(const std::vector<Point>& src, const std::vector<Point>& dst, M& a) {
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double x = src[i].x(), y = src[i].y();
    const double u = dst[i].x(), v = dst[i].y();
    const Eigen::Index r = 2 * static_cast<Eigen::Index>(i);
    a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
}

// Right singular vector of the smallest singular value; throws when the
// system has rank below 8.
template <typename M>
Eigen::VectorXd NullVector(const M& a) {
  const Eigen::JacobiSVD<M> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-10 * sv(0)) {
    throw EstimationError("dlt: degenerate configuration (rank deficient system)");
  }
  return svd.matrixV().col(8);
}

}  // namespace

Homography DltHomography(const CorrespondenceSet& corrs) {
  const std::size_t n = corrs.size();
  if (n < 4) {
    throw EstimationError("dlt: need at least 4 correspondences, got " +
                          std::to_string(n));
  }
  std::vector<Point> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = corrs.pairs[i].anchor;
    dst[i] = corrs.pairs[i].positive;
  }
  const Eigen::Matrix3d ts = NormalizingTransform(src);
  const Eigen::Matrix3d td = NormalizingTransform(dst);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = Transform(ts, src[i]);
    dst[i] = Transform(td, dst[i]);
  }
  if (n == 4 && (HasCollinearTriple(src) || HasCollinearTriple(dst))) {
    throw EstimationError("dlt: minimal sample contains three collinear points");
  }

  Eigen::VectorXd h;
  if (n == 4) {
    Eigen::Matrix<double, 8, 9> a;
    FillDltRows(src, dst, a);
    // Minimal sample: fix h33 = 1 and solve the square system, falling back
    // to the SVD when that system is singular.
    const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a.leftCols<8>());
    if (lu.isInvertible()) {
      h.resize(9);
      h.head<8>() = lu.solve(-a.col(8));
      h(8) = 1.0;
      h.normalize();
    } else {
      h = NullVector(a);
    }
  } else {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), 9);
    FillDltRows(src, dst, a);
    h = NullVector(a);
  }
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(td.inverse() * hn * ts);
}

namespace {

bool MapPoint(const Eigen::Matrix3d& t, const Point& p, Point& out) {
  const double w = t(2, 0) * p.x() + t(2, 1) * p.y() + t(2, 2);
  if (std::abs(w) < 1e-12) return false;
  out = {(t(0, 0) * p.x() + t(0, 1) * p.y() + t(0, 2)) / w,
         (t(1, 0) * p.x() + t(1, 1) * p.y() + t(1, 2)) / w};
  return true;
}

double TransferError(const Eigen::Matrix3d& m, const Eigen::Matrix3d& inv,
                     const Correspondence& c) {
  Point fwd, bwd;
  if (!MapPoint(m, c.anchor, fwd) || !MapPoint(inv, c.positive, bwd)) {
    return std::numeric_limits<double>::infinity();
  }
  return 0.5 * ((fwd - c.positive).norm() + (bwd - c.anchor).norm());
}

}  // namespace

double SymmetricTransferError(const Homography& h, const Correspondence& c) {
  return TransferError(h.matrix(), h.matrix().inverse(), c);
}

namespace {

struct Scored {
  std::size_t count = 0;
  double total_error = 0.0;
  std::vector<bool> mask;
};

Scored Score(const Homography& h, const std::vector<Correspondence>& matches,
             double threshold) {
  const Eigen::Matrix3d m = h.matrix();
  const Eigen::Matrix3d inv = m.inverse();
  Scored s;
  s.mask.assign(matches.size(), false);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const double err = TransferError(m, inv, matches[i]);
    if (err < threshold) {
      s.mask[i] = true;
      ++s.count;
      s.total_error += err;
    }
  }
  return s;
}

}  // namespace

RansacResult RansacHomography(const CorrespondenceSet& matches,
                              const RansacConfig& cfg) {
  const std::size_t n = matches.size();
  if (n < 4) {
    throw EstimationError("ransac: need at least 4 matches, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) {
    const Correspondence& c = matches.pairs[i];
    return std::make_tuple(c.anchor.x(), c.anchor.y(), c.positive.x(), c.positive.y());
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<Correspondence> canon(n);
  for (std::size_t i = 0; i < n; ++i) canon[i] = matches.pairs[order[i]];

  Scored best;
  Homography best_h;
  bool found = false;
  int limit = std::max(cfg.max_iterations, 1);
  int iter = 0;
  for (; iter < limit; ++iter) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(iter));
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool dup;
      do {
        idx[k] = static_cast<std::size_t>(rng.Below(n));
        dup = std::find(idx.begin(), idx.begin() + k, idx[k]) != idx.begin() + k;
      } while (dup);
    }
    CorrespondenceSet sample;
    for (std::size_t i : idx) sample.pairs.push_back(canon[i]);
    Homography h;
    try {
      h = DltHomography(sample);
    } catch (const EstimationError&) {
      continue;
    }
    Scored s = Score(h, canon, cfg.inlier_threshold);
    const bool better = !found || s.count > best.count ||
                        (s.count == best.count && s.total_error < best.total_error);
    if (!better) continue;
    best = std::move(s);
    best_h = h;
    found = true;
    const double w = static_cast<double>(best.count) / static_cast<double>(n);
    if (w >= 1.0) {
      limit = iter + 1;
    } else if (w > 0.0) {
      const double needed =
          std::ceil(std::log(1.0 - cfg.confidence) / std::log(1.0 - std::pow(w, 4)));
      if (needed < static_cast<double>(limit)) {
        limit = std::max(iter + 1, static_cast<int>(needed));
      }
    }
  }
  if (!found || best.count < 4) {
    throw EstimationError("ransac: fewer than 4 inliers");
  }

  CorrespondenceSet inliers;
  for (std::size_t i = 0; i < n; ++i) {
    if (best.mask[i]) inliers.pairs.push_back(canon[i]);
  }
  try {
    const Homography refit = DltHomography(inliers);
    Scored s = Score(refit, canon, cfg.inlier_threshold);
    if (s.count >= best.count) {
      best = std::move(s);
      best_h = refit;
    }
  } catch (const EstimationError&) {
    // Keep the best minimal-sample hypothesis.
  }

  RansacResult result;
  result.h = best_h;
  result.inlier_count = best.count;
  result.iterations = iter;
  result.inliers.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) result.inliers[order[i]] = best.mask[i];
  return result;
}

double CornerError(const Homography& estimate, const Homography& truth,
                   int width, int height) {
  const double w = width - 1;
  const double h = height - 1;
  double total = 0.0;
  for (const Point& c : {Point(0, 0), Point(w, 0), Point(0, h), Point(w, h)}) {
    total += (estimate(c) - truth(c)).norm();
  }
  return total / 4.0;
}

}  // namespace hardneg::geometry
