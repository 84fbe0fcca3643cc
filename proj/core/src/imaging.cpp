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

#include "hardneg/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "hardneg/error.hpp"
#include "hardneg/rng.hpp"

namespace hardneg::imaging {
namespace {

constexpr std::uint64_t kCorpusStream = 0xC0;
constexpr std::uint64_t kAugmentStream = 0xA0;
constexpr std::uint64_t kNoiseStream = 0xA1;

using Color = std::array<double, 3>;

Color RandomColor(CounterRng& rng) {
  return {rng.Uniform(0.05, 0.95), rng.Uniform(0.05, 0.95),
          rng.Uniform(0.05, 0.95)};
}

void Put(ImageRGB& img, int x, int y, const Color& c) {
  for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
}

Color Lerp(const Color& a, const Color& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]),
          a[2] + t * (b[2] - a[2])};
}

void DrawPolygon(ImageRGB& img, CounterRng& rng) {
  const int w = img.width();
  const int h = img.height();
  const double side = std::min(w, h);
  const double cx = rng.Uniform(0.1, 0.9) * w;
  const double cy = rng.Uniform(0.1, 0.9) * h;
  const double radius = rng.Uniform(0.08, 0.25) * side;
  const int n = 3 + static_cast<int>(rng.Below(5));
  std::vector<double> angles(n);
  for (double& a : angles) a = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  std::sort(angles.begin(), angles.end());
  std::vector<double> vx(n), vy(n);
  for (int i = 0; i < n; ++i) {
    const double r = radius * rng.Uniform(0.5, 1.0);
    vx[i] = cx + r * std::cos(angles[i]);
    vy[i] = cy + r * std::sin(angles[i]);
  }
  const Color color = RandomColor(rng);
  const int x0 = std::max(0, static_cast<int>(cx - radius) - 1);
  const int x1 = std::min(w - 1, static_cast<int>(cx + radius) + 1);
  const int y0 = std::max(0, static_cast<int>(cy - radius) - 1);
  const int y1 = std::min(h - 1, static_cast<int>(cy + radius) + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      // Even-odd rule at the pixel center.
      const double px = x + 0.5;
      const double py = y + 0.5;
      bool inside = false;
      for (int i = 0, j = n - 1; i < n; j = i++) {
        if ((vy[i] > py) != (vy[j] > py) &&
            px < (vx[j] - vx[i]) * (py - vy[i]) / (vy[j] - vy[i]) + vx[i]) {
          inside = !inside;
        }
      }
      if (inside) Put(img, x, y, color);
    }
  }
}

struct Rect {
  int x0, y0, x1, y1;  // inclusive
};

Rect RandomRect(const ImageRGB& img, CounterRng& rng, double lo, double hi) {
  const int rw = std::max(8, static_cast<int>(rng.Uniform(lo, hi) * img.width()));
  const int rh =
      std::max(8, static_cast<int>(rng.Uniform(lo, hi) * img.height()));
  const int x0 = static_cast<int>(rng.Below(img.width() - rw + 1));
  const int y0 = static_cast<int>(rng.Below(img.height() - rh + 1));
  return {x0, y0, x0 + rw - 1, y0 + rh - 1};
}

void DrawGradientRect(ImageRGB& img, CounterRng& rng) {
  const Rect r = RandomRect(img, rng, 0.15, 0.4);
  const double angle = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const Color a = RandomColor(rng);
  const Color b = RandomColor(rng);
  const double len = std::abs(dx) * (r.x1 - r.x0) + std::abs(dy) * (r.y1 - r.y0);
  const double ox = dx >= 0 ? r.x0 : r.x1;
  const double oy = dy >= 0 ? r.y0 : r.y1;
  for (int y = r.y0; y <= r.y1; ++y) {
    for (int x = r.x0; x <= r.x1; ++x) {
      const double t = std::clamp(((x - ox) * dx + (y - oy) * dy) / len, 0.0, 1.0);
      Put(img, x, y, Lerp(a, b, t));
    }
  }
}

void DrawChecker(ImageRGB& img, CounterRng& rng) {
  const Rect r = RandomRect(img, rng, 0.15, 0.35);
  const int cell = 6 + static_cast<int>(rng.Below(11));
  const Color a = RandomColor(rng);
  const Color b = RandomColor(rng);
  for (int y = r.y0; y <= r.y1; ++y) {
    for (int x = r.x0; x <= r.x1; ++x) {
      const bool odd = (((x - r.x0) / cell) + ((y - r.y0) / cell)) % 2 != 0;
      Put(img, x, y, odd ? a : b);
    }
  }
}

double LatticeValue(std::uint64_t key, int ix, int iy) {
  const std::uint64_t h =
      Mix64(key ^ Mix64(static_cast<std::uint64_t>(ix) * 0x9E3779B1ULL +
                        static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double Smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

void DrawNoiseBlob(ImageRGB& img, CounterRng& rng) {
  const int w = img.width();
  const int h = img.height();
  const double cx = rng.Uniform(0.15, 0.85) * w;
  const double cy = rng.Uniform(0.15, 0.85) * h;
  const double rx = rng.Uniform(0.1, 0.25) * w;
  const double ry = rng.Uniform(0.1, 0.25) * h;
  const double cell = rng.Uniform(8.0, 16.0);
  const std::uint64_t key = rng();
  const Color a = RandomColor(rng);
  const Color b = RandomColor(rng);
  const int x0 = std::max(0, static_cast<int>(cx - rx));
  const int x1 = std::min(w - 1, static_cast<int>(cx + rx));
  const int y0 = std::max(0, static_cast<int>(cy - ry));
  const int y1 = std::min(h - 1, static_cast<int>(cy + ry));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double ex = (x - cx) / rx;
      const double ey = (y - cy) / ry;
      if (ex * ex + ey * ey > 1.0) continue;
      const double gx = x / cell;
      const double gy = y / cell;
      const int ix = static_cast<int>(std::floor(gx));
      const int iy = static_cast<int>(std::floor(gy));
      const double fx = Smoothstep(gx - ix);
      const double fy = Smoothstep(gy - iy);
      const double v00 = LatticeValue(key, ix, iy);
      const double v10 = LatticeValue(key, ix + 1, iy);
      const double v01 = LatticeValue(key, ix, iy + 1);
      const double v11 = LatticeValue(key, ix + 1, iy + 1);
      const double top = v00 + fx * (v10 - v00);
      const double bot = v01 + fx * (v11 - v01);
      Put(img, x, y, Lerp(a, b, top + fy * (bot - top)));
    }
  }
}

// Separable Gaussian over a single plane with edge clamping.
std::vector<double> BlurPlane(const std::vector<double>& plane, int w, int h,
                              double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  std::vector<double> tmp(plane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        acc += kernel[i + radius] * plane[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  std::vector<double> out(plane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, h - 1);
        acc += kernel[i + radius] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

template <int C>
std::vector<double> GetPlane(const Image<C>& img, int c) {
  std::vector<double> plane(static_cast<std::size_t>(img.width()) * img.height());
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = img.data()[i * C + c];
  return plane;
}

template <int C>
void SetPlane(Image<C>& img, int c, const std::vector<double>& plane) {
  for (std::size_t i = 0; i < plane.size(); ++i) img.data()[i * C + c] = plane[i];
}

template <int C>
void ApplyBlur(Image<C>& img, double sigma) {
  for (int c = 0; c < C; ++c) {
    SetPlane(img, c, BlurPlane(GetPlane(img, c), img.width(), img.height(), sigma));
  }
}

template <int C>
void ApplyCommonHead(Image<C>& img, const AugmentParams& p) {
  if (p.brightness_delta != 0.0) {
    for (double& v : img.data()) v += p.brightness_delta;
    img.Clamp01();
  }
  if (p.contrast_factor != 1.0) {
    for (double& v : img.data()) v = (v - 0.5) * p.contrast_factor + 0.5;
    img.Clamp01();
  }
}

template <int C>
void ApplyCommonTail(Image<C>& img, const AugmentParams& p) {
  if (p.blur_sigma > 0.0) {
    ApplyBlur(img, p.blur_sigma);
    img.Clamp01();
  }
  if (p.noise_sigma > 0.0) {
    CounterRng rng(p.seed, kNoiseStream);
    for (double& v : img.data()) v += p.noise_sigma * rng.Normal();
    img.Clamp01();
  }
}

template <typename Fn>
void ForEachHsv(ImageRGB& img, Fn&& fn) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double h, s, v;
      RgbToHsv(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2), h, s, v);
      fn(h, s, v);
      HsvToRgb(h, s, v, img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
    }
  }
  img.Clamp01();
}

}  // namespace

ImageRGB GenerateSyntheticImage(const CorpusSpec& spec, std::uint64_t seed) {
  if (spec.width < 64 || spec.height < 64) {
    throw ValidationError("synthetic image must be at least 64x64, got " +
                          std::to_string(spec.width) + "x" +
                          std::to_string(spec.height));
  }
  if (spec.element_count < 1) {
    throw ValidationError("synthetic image needs at least one element");
  }
  CounterRng rng(seed, kCorpusStream);
  ImageRGB img(spec.width, spec.height);

  const Color a = RandomColor(rng);
  const Color b = RandomColor(rng);
  const double angle = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  const double dx = std::cos(angle) / spec.width;
  const double dy = std::sin(angle) / spec.height;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double t = std::clamp(0.5 + (x - spec.width / 2.0) * dx +
                                      (y - spec.height / 2.0) * dy,
                                  0.0, 1.0);
      Put(img, x, y, Lerp(a, b, t));
    }
  }
  for (int e = 0; e < spec.element_count; ++e) {
    switch (rng.Below(4)) {
      case 0: DrawPolygon(img, rng); break;
      case 1: DrawGradientRect(img, rng); break;
      case 2: DrawChecker(img, rng); break;
      default: DrawNoiseBlob(img, rng); break;
    }
  }
  img.Clamp01();
  return img;
}

std::vector<Keypoint> DetectHarris(const ImageGray& img, int max_keypoints,
                                   int nms_radius,
                                   const HarrisOptions& options) {
  const int w = img.width();
  const int h = img.height();
  if (w < 16 || h < 16) {
    throw ValidationError("harris: image must be at least 16x16");
  }
  if (max_keypoints <= 0 || nms_radius <= 0) {
    throw ValidationError("harris: max_keypoints and nms_radius must be positive");
  }
  auto px = [&](int x, int y) {
    return img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> ixx(n), iyy(n), ixy(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      ixx[i] = gx * gx;
      iyy[i] = gy * gy;
      ixy[i] = gx * gy;
    }
  }
  std::vector<double> response(n, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const std::size_t j =
              static_cast<std::size_t>(std::clamp(y + dy, 0, h - 1)) * w +
              std::clamp(x + dx, 0, w - 1);
          sxx += ixx[j];
          syy += iyy[j];
          sxy += ixy[j];
        }
      }
      const double trace = sxx + syy;
      response[static_cast<std::size_t>(y) * w + x] =
          sxx * syy - sxy * sxy - options.k * trace * trace;
    }
  }

  const int border = std::max(options.border, 1);
  double max_response = 0.0;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      max_response = std::max(max_response, response[static_cast<std::size_t>(y) * w + x]);
    }
  }
  if (max_response <= 1e-12) return {};
  const double threshold = options.relative_threshold * max_response;

  std::vector<Keypoint> candidates;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      const double r = response[static_cast<std::size_t>(y) * w + x];
      if (r <= threshold) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (response[static_cast<std::size_t>(y + dy) * w + x + dx] > r) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({static_cast<double>(x), static_cast<double>(y), r});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Keypoint& a, const Keypoint& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.y != b.y) return a.y < b.y;
              return a.x < b.x;
            });

  std::vector<Keypoint> kept;
  for (const Keypoint& c : candidates) {
    if (static_cast<int>(kept.size()) >= max_keypoints) break;
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](const Keypoint& k) {
      return std::max(std::abs(k.x - c.x), std::abs(k.y - c.y)) <= nms_radius;
    });
    if (clear) kept.push_back(c);
  }
  return kept;
}

AugmentParams SampleAugmentParams(std::uint64_t seed) {
  CounterRng rng(seed, kAugmentStream);
  AugmentParams p;
  p.brightness_delta = rng.Uniform(-0.2, 0.2);
  p.contrast_factor = rng.Uniform(0.7, 1.3);
  p.hue_delta = rng.Uniform(-20.0, 20.0);
  p.saturation_factor = rng.Uniform(0.7, 1.3);
  p.blur_sigma = rng.Uniform(0.0, 1.5);
  p.noise_sigma = rng.Uniform(0.0, 0.04);
  p.clahe_enabled = rng.Uniform() < 0.3;
  p.clahe_clip = 2.0;
  p.clahe_tiles = 4;
  p.seed = rng();
  return p;
}

ImageRGB AugmentColor(const ImageRGB& img, const AugmentParams& params) {
  ImageRGB out = img;
  ApplyCommonHead(out, params);
  if (params.hue_delta != 0.0) {
    ForEachHsv(out, [&](double& h, double&, double&) {
      h = std::fmod(h + params.hue_delta, 360.0);
      if (h < 0.0) h += 360.0;
    });
  }
  if (params.saturation_factor != 1.0) {
    ForEachHsv(out, [&](double&, double& s, double&) {
      s = std::clamp(s * params.saturation_factor, 0.0, 1.0);
    });
  }
  ApplyCommonTail(out, params);
  if (params.clahe_enabled) {
    const int n = out.width() * out.height();
    ImageGray value(out.width(), out.height());
    std::vector<double> hue(n), sat(n);
    for (int i = 0; i < n; ++i) {
      RgbToHsv(out.data()[3 * i], out.data()[3 * i + 1], out.data()[3 * i + 2],
               hue[i], sat[i], value.data()[i]);
    }
    const ImageGray eq = Clahe(value, params.clahe_clip, params.clahe_tiles);
    for (int i = 0; i < n; ++i) {
      HsvToRgb(hue[i], sat[i], eq.data()[i], out.data()[3 * i],
               out.data()[3 * i + 1], out.data()[3 * i + 2]);
    }
    out.Clamp01();
  }
  return out;
}

ImageGray AugmentColor(const ImageGray& img, const AugmentParams& params) {
  ImageGray out = img;
  ApplyCommonHead(out, params);
  ApplyCommonTail(out, params);
  if (params.clahe_enabled) {
    out = Clahe(out, params.clahe_clip, params.clahe_tiles);
  }
  return out;
}

ImageGray GaussianBlur(const ImageGray& img, double sigma) {
  if (sigma <= 0.0) return img;
  ImageGray out = img;
  ApplyBlur(out, sigma);
  return out;
}

ImageGray Clahe(const ImageGray& img, double clip, int tiles) {
  constexpr int kBins = 256;
  const int w = img.width();
  const int h = img.height();
  if (tiles < 1 || w / tiles < 8 || h / tiles < 8) {
    throw ValidationError("clahe: a " + std::to_string(tiles) + "x" +
                          std::to_string(tiles) + " grid on " +
                          std::to_string(w) + "x" + std::to_string(h) +
                          " leaves cells under 8 px");
  }
  if (!(clip > 0.0)) throw ValidationError("clahe: clip limit must be positive");

  std::vector<int> bx(tiles + 1), by(tiles + 1);
  for (int t = 0; t <= tiles; ++t) {
    bx[t] = t * w / tiles;
    by[t] = t * h / tiles;
  }
  auto bin_of = [](double v) {
    return std::clamp(static_cast<int>(std::lround(v * (kBins - 1))), 0, kBins - 1);
  };

  // lut[ty][tx][bin] in [0, 1].
  std::vector<std::array<double, kBins>> lut(static_cast<std::size_t>(tiles) * tiles);
  for (int ty = 0; ty < tiles; ++ty) {
    for (int tx = 0; tx < tiles; ++tx) {
      std::array<double, kBins> hist{};
      for (int y = by[ty]; y < by[ty + 1]; ++y) {
        for (int x = bx[tx]; x < bx[tx + 1]; ++x) hist[bin_of(img.at(x, y))] += 1.0;
      }
      const double count = static_cast<double>(bx[tx + 1] - bx[tx]) * (by[ty + 1] - by[ty]);
      if (std::isfinite(clip)) {
        const double limit = std::max(1.0, clip * count / kBins);
        double excess = 0.0;
        for (double& v : hist) {
          if (v > limit) {
            excess += v - limit;
            v = limit;
          }
        }
        for (double& v : hist) v += excess / kBins;
      }
      auto& table = lut[static_cast<std::size_t>(ty) * tiles + tx];
      double cdf = 0.0;
      for (int b = 0; b < kBins; ++b) {
        cdf += hist[b];
        table[b] = std::min(1.0, cdf / count);
      }
    }
  }

  std::vector<double> cx(tiles), cy(tiles);
  for (int t = 0; t < tiles; ++t) {
    cx[t] = (bx[t] + bx[t + 1] - 1) / 2.0;
    cy[t] = (by[t] + by[t + 1] - 1) / 2.0;
  }
  // Neighbouring tile indices and blend weight along one axis.
  auto locate = [tiles](const std::vector<double>& centers, double p, int& t0,
                        int& t1, double& wgt) {
    if (p <= centers.front()) {
      t0 = t1 = 0;
      wgt = 0.0;
      return;
    }
    if (p >= centers.back()) {
      t0 = t1 = tiles - 1;
      wgt = 0.0;
      return;
    }
    t0 = 0;
    while (t0 + 1 < tiles && centers[t0 + 1] <= p) ++t0;
    t1 = t0 + 1;
    wgt = (p - centers[t0]) / (centers[t1] - centers[t0]);
  };

  ImageGray out(w, h);
  for (int y = 0; y < h; ++y) {
    int ty0, ty1;
    double wy;
    locate(cy, y, ty0, ty1, wy);
    for (int x = 0; x < w; ++x) {
      int tx0, tx1;
      double wx;
      locate(cx, x, tx0, tx1, wx);
      const int b = bin_of(img.at(x, y));
      auto m = [&](int ty, int tx) {
        return lut[static_cast<std::size_t>(ty) * tiles + tx][b];
      };
      const double top = (1.0 - wx) * m(ty0, tx0) + wx * m(ty0, tx1);
      const double bot = (1.0 - wx) * m(ty1, tx0) + wx * m(ty1, tx1);
      out.at(x, y) = std::clamp((1.0 - wy) * top + wy * bot, 0.0, 1.0);
    }
  }
  return out;
}

void RgbToHsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  v = mx;
  s = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r) {
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
}

void HsvToRgb(double h, double s, double v, double& r, double& g, double& b) {
  const double c = v * s;
  const double hp = std::fmod(h, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp)) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  const double m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

PatchTensor ExtractPatch(const ImageGray& img, const Keypoint& kp, int side) {
  if (side < 8 || side % 2 != 0) {
    throw ValidationError("patch side must be even and >= 8, got " +
                          std::to_string(side));
  }
  PatchTensor patch{side, std::vector<double>(static_cast<std::size_t>(side) * side)};
  const double x0 = kp.x - side / 2;
  const double y0 = kp.y - side / 2;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      patch.values[static_cast<std::size_t>(r) * side + c] = img.Sample(x0 + c, y0 + r);
    }
  }
  return patch;
}

}  // namespace hardneg::imaging
