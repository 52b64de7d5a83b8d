// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <fstream>

#include "awmfuse/image_io.hpp"
#include "awmfuse/metrics.hpp"
#include "test_util.hpp"

using namespace awm;

namespace {

struct Triple {
  ImageRgb fused;
  ImageRgb vi;
  ImageGray ir;
};

// Structured fused image: per-pixel mean of the two sources.
Triple make_triple(int h, int w, std::uint64_t seed) {
  Triple t;
  t.vi = testutil::synth_scene(h, w, seed);
  t.ir = testutil::synth_ir(t.vi, seed + 1);
  t.fused = ImageRgb(h, w);
  const Tensor lum = luminance(t.vi);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < lum.numel(); ++i)
      t.fused.pixels.vec()[c * lum.numel() + i] =
          0.5 * (t.vi.pixels.vec()[c * lum.numel() + i] + t.ir.pixels[i]);
  return t;
}

ImageRgb add_noise(const ImageRgb& img, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  ImageRgb out = img;
  for (double& v : out.pixels.vec()) v += sigma * rng.normal();
  clamp01(out.pixels);
  return out;
}

}  // namespace

TEST_CASE("suite ssim matches the independent reference on seeded triples") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Triple t = make_triple(32, 32, seed * 17);
    const Tensor f = luminance255(t.fused);
    const Tensor a = luminance255(t.vi);
    const Tensor b = luminance255(t.ir);
    const double suite =
        0.5 * (ssim_metric(f, a) + ssim_metric(f, b));
    const double reference = 0.5 * (testutil::reference_ssim(f, a, 255.0) +
                                    testutil::reference_ssim(f, b, 255.0));
    CHECK(std::fabs(suite - reference) < 1e-6);
    const MetricReport r = evaluate(t.fused, t.vi, t.ir);
    CHECK(std::fabs(r.ssim - reference) < 1e-6);
  }
}

TEST_CASE("identical inputs: ssim is 1, scd degenerates to 0") {
  const ImageRgb scene = testutil::synth_scene(32, 32, 5);
  const ImageGray gray(luminance(scene));
  const ImageRgb fused = replicate_gray(gray);
  const MetricReport r = evaluate(fused, fused, gray);
  CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-9));
  // F - A and F - B are identically zero: the zero-variance rule maps
  // both correlation terms to 0.
  CHECK(r.scd == 0.0);
  CHECK(r.qcv == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("noise strictly worsens qg, qs, ssim, vif and raises qcv") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Triple t = make_triple(64, 64, seed * 31);
    const ImageRgb noisy = add_noise(t.fused, 0.1, seed * 131);
    const MetricReport clean = evaluate(t.fused, t.vi, t.ir);
    const MetricReport degraded = evaluate(noisy, t.vi, t.ir);
    CHECK(degraded.qg < clean.qg);
    CHECK(degraded.qs < clean.qs);
    CHECK(degraded.ssim < clean.ssim);
    CHECK(degraded.vif < clean.vif);
    CHECK(degraded.qcv > clean.qcv);
  }
}

TEST_CASE("scd is invariant to constant shifts of the fused image") {
  const Triple t = make_triple(32, 32, 9);
  const MetricReport base = evaluate(t.fused, t.vi, t.ir);
  // Shift in luminance space without touching relative structure: the
  // 8-bit quantization makes tiny shifts exact only for multiples of
  // 1/255, so shift by exactly 10 levels and keep values inside [0,1].
  ImageRgb shifted = t.fused;
  for (double& v : shifted.pixels.vec())
    v = std::clamp(v * 0.7 + 20.0 / 255.0, 0.0, 1.0);
  // Pearson correlation ignores affine offsets of either argument as
  // long as no clipping bites; compare against a direct recomputation.
  const MetricReport moved = evaluate(shifted, t.vi, t.ir);
  ImageRgb shifted_more = shifted;
  for (double& v : shifted_more.pixels.vec()) v += 30.0 / 255.0;
  clamp01(shifted_more.pixels);
  const MetricReport moved_more = evaluate(shifted_more, t.vi, t.ir);
  CHECK(moved.scd == doctest::Approx(moved_more.scd).epsilon(1e-6));
  CHECK(base.scd == doctest::Approx(base.scd));
}

TEST_CASE("metric report ranges and determinism") {
  const Triple t = make_triple(48, 48, 21);
  const MetricReport a = evaluate(t.fused, t.vi, t.ir);
  const MetricReport b = evaluate(t.fused, t.vi, t.ir);
  CHECK(a.qg == b.qg);
  CHECK(a.qm == b.qm);
  CHECK(a.qs == b.qs);
  CHECK(a.qcv == b.qcv);
  CHECK(a.vif == b.vif);
  CHECK(a.ssim == b.ssim);
  CHECK(a.scd == b.scd);

  CHECK(a.qg >= 0.0);
  CHECK(a.qg <= 1.0);
  CHECK(a.qs >= 0.0);
  CHECK(a.qs <= 1.0);
  CHECK(a.qm >= 0.0);
  CHECK(a.qm <= 2.0);
  CHECK(a.qcv >= 0.0);
  CHECK(a.ssim >= -1.0);
  CHECK(a.ssim <= 1.0);
  CHECK(a.scd >= -2.0);
  CHECK(a.scd <= 2.0);
  CHECK(std::isfinite(a.vif));
}

TEST_CASE("qm matches a brute-force two-level reimplementation") {
  // Independent oracle: manual 2x2 block Haar applied twice, sigmoids
  // recoded from their constants.
  const Triple t = make_triple(32, 32, 33);
  const Tensor f = luminance255(t.fused);
  const Tensor a = luminance255(t.vi);
  const Tensor b = luminance255(t.ir);

  auto haar_once = [](const Tensor& img) {
    const int h = img.dim(0) / 2, w = img.dim(1) / 2;
    std::array<Tensor, 4> bands{Tensor({h, w}), Tensor({h, w}), Tensor({h, w}),
                                Tensor({h, w})};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double p = img.at(2 * y, 2 * x), q = img.at(2 * y, 2 * x + 1);
        const double r = img.at(2 * y + 1, 2 * x), s = img.at(2 * y + 1, 2 * x + 1);
        bands[0].at(y, x) = 0.5 * (p + q + r + s);
        bands[1].at(y, x) = 0.5 * (p + q - r - s);
        bands[2].at(y, x) = 0.5 * (p - q + r - s);
        bands[3].at(y, x) = 0.5 * (p - q - r + s);
      }
    return bands;
  };
  auto level_score = [](const std::array<Tensor, 4>& ba,
                        const std::array<Tensor, 4>& bb,
                        const std::array<Tensor, 4>& bf) {
    double num = 0.0, den = 0.0;
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < ba[0].numel(); ++i) {
      auto mag = [&](const std::array<Tensor, 4>& bands) {
        return std::sqrt(bands[1][i] * bands[1][i] + bands[2][i] * bands[2][i] +
                         bands[3][i] * bands[3][i]);
      };
      auto ang = [&](const std::array<Tensor, 4>& bands) {
        return std::atan(bands[1][i] / (bands[2][i] + 1e-12));
      };
      auto score = [&](double ms, double as_, double mf, double af) {
        const double ratio =
            ms == mf ? 1.0 : (ms > mf ? mf / ms : ms / mf);
        const double angle = 1.0 - std::fabs(as_ - af) / (pi / 2.0);
        const double qg = 0.9994 / (1.0 + std::exp(-15.0 * (ratio - 0.5)));
        const double qa = 0.9879 / (1.0 + std::exp(-22.0 * (angle - 0.8)));
        return qg * qa;
      };
      const double ma = mag(ba), mb = mag(bb), mf = mag(bf);
      num += score(ma, ang(ba), mf, ang(bf)) * ma +
             score(mb, ang(bb), mf, ang(bf)) * mb;
      den += ma + mb;
    }
    return den > 0.0 ? num / den : 0.0;
  };

  const auto a1 = haar_once(a), b1 = haar_once(b), f1 = haar_once(f);
  const auto a2 = haar_once(a1[0]), b2 = haar_once(b1[0]), f2 = haar_once(f1[0]);
  const double expected = level_score(a1, b1, f1) + level_score(a2, b2, f2);

  const MetricReport r = evaluate(t.fused, t.vi, t.ir);
  CHECK(r.qm == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("qg matches an independently coded recomputation") {
  const Triple t = make_triple(24, 24, 55);
  const Tensor f = luminance255(t.fused);
  const Tensor a = luminance255(t.vi);
  const Tensor b = luminance255(t.ir);
  const int h = 24, w = 24;

  auto sobel = [&](const Tensor& img, int y, int x, bool horizontal) {
    auto px = [&](int yy, int xx) {
      return img.at(std::clamp(yy, 0, h - 1), std::clamp(xx, 0, w - 1));
    };
    if (horizontal)
      return px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1) -
             px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1);
    return px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1) -
           px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1);
  };
  auto preservation = [](double gs, double as_, double gf, double af) {
    const double ratio = gs == gf ? 1.0 : (gs > gf ? gf / gs : gs / gf);
    const double angle =
        1.0 - std::fabs(as_ - af) / (3.14159265358979323846 / 2.0);
    return (0.9994 / (1.0 + std::exp(-15.0 * (ratio - 0.5)))) *
           (0.9879 / (1.0 + std::exp(-22.0 * (angle - 0.8))));
  };
  double num = 0.0, den = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gxa = sobel(a, y, x, true), gya = sobel(a, y, x, false);
      const double gxb = sobel(b, y, x, true), gyb = sobel(b, y, x, false);
      const double gxf = sobel(f, y, x, true), gyf = sobel(f, y, x, false);
      const double ga = std::hypot(gxa, gya), gb = std::hypot(gxb, gyb);
      const double gf = std::hypot(gxf, gyf);
      const double aa = std::atan(gya / (gxa + 1e-12));
      const double ab = std::atan(gyb / (gxb + 1e-12));
      const double af = std::atan(gyf / (gxf + 1e-12));
      num += preservation(ga, aa, gf, af) * ga + preservation(gb, ab, gf, af) * gb;
      den += ga + gb;
    }
  const MetricReport r = evaluate(t.fused, t.vi, t.ir);
  CHECK(r.qg == doctest::Approx(num / den).epsilon(1e-9));
}

TEST_CASE("qs matches a direct-summation window oracle") {
  const Triple t = make_triple(20, 20, 66);
  const Tensor f = luminance255(t.fused);
  const Tensor a = luminance255(t.vi);
  const Tensor b = luminance255(t.ir);

  // Direct per-window statistics, no integral images.
  auto window_stats = [&](const Tensor& x, const Tensor& y, int oy, int ox,
                          double& q0, double& var_x) {
    constexpr int kWin = 8;
    const double n = kWin * kWin;
    double mx = 0.0, my = 0.0;
    for (int dy = 0; dy < kWin; ++dy)
      for (int dx = 0; dx < kWin; ++dx) {
        mx += x.at(oy + dy, ox + dx);
        my += y.at(oy + dy, ox + dx);
      }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (int dy = 0; dy < kWin; ++dy)
      for (int dx = 0; dx < kWin; ++dx) {
        const double ex = x.at(oy + dy, ox + dx) - mx;
        const double ey = y.at(oy + dy, ox + dx) - my;
        vx += ex * ex;
        vy += ey * ey;
        cxy += ex * ey;
      }
    vx /= (n - 1.0);
    vy /= (n - 1.0);
    cxy /= (n - 1.0);
    var_x = std::max(vx, 0.0);
    const double den = (vx + vy) * (mx * mx + my * my);
    q0 = den > 1e-12 ? 4.0 * cxy * mx * my / den : 0.0;
  };
  double acc = 0.0;
  int count = 0;
  for (int oy = 0; oy + 8 <= 20; ++oy)
    for (int ox = 0; ox + 8 <= 20; ++ox) {
      double q0a, q0b, va, vb;
      window_stats(a, f, oy, ox, q0a, va);
      window_stats(b, f, oy, ox, q0b, vb);
      const double lambda = (va + vb) > 1e-12 ? va / (va + vb) : 0.5;
      acc += lambda * q0a + (1.0 - lambda) * q0b;
      ++count;
    }
  const double expected = std::clamp(acc / count, 0.0, 1.0);
  const MetricReport r = evaluate(t.fused, t.vi, t.ir);
  CHECK(r.qs == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("qcv matches a naive-DFT reimplementation on a 32x32 triple") {
  const Triple t = make_triple(32, 32, 77);
  const Tensor f = luminance255(t.fused);
  const Tensor a = luminance255(t.vi);
  const Tensor b = luminance255(t.ir);
  const int n = 32;  // power of two: padding is a no-op, DFT sizes match

  auto csf = [](double cpd) {
    const double fr = 0.114 * cpd;
    return 2.6 * (0.0192 + fr) * std::exp(-std::pow(fr, 1.1));
  };
  auto filter_naive = [&](const Tensor& x, const Tensor& y) {
    // O(N^4) DFT of the difference, CSF weighting, inverse.
    std::vector<std::complex<double>> freq(n * n);
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        std::complex<double> acc = 0.0;
        for (int yy = 0; yy < n; ++yy)
          for (int xx = 0; xx < n; ++xx) {
            const double ang = -2.0 * 3.14159265358979323846 *
                               (double(u * yy) / n + double(v * xx) / n);
            acc += (x.at(yy, xx) - y.at(yy, xx)) *
                   std::complex<double>(std::cos(ang), std::sin(ang));
          }
        const double fy = (u <= n / 2 ? u : u - n) / double(n);
        const double fx = (v <= n / 2 ? v : v - n) / double(n);
        freq[u * n + v] = acc * csf(32.0 * std::hypot(fx, fy));
      }
    Tensor out({n, n});
    for (int yy = 0; yy < n; ++yy)
      for (int xx = 0; xx < n; ++xx) {
        std::complex<double> acc = 0.0;
        for (int u = 0; u < n; ++u)
          for (int v = 0; v < n; ++v) {
            const double ang = 2.0 * 3.14159265358979323846 *
                               (double(u * yy) / n + double(v * xx) / n);
            acc += freq[u * n + v] *
                   std::complex<double>(std::cos(ang), std::sin(ang));
          }
        out.at(yy, xx) = acc.real() / (n * n);
      }
    return out;
  };
  auto sobel_sq = [&](const Tensor& img, int oy, int ox) {
    double acc = 0.0;
    auto px = [&](int yy, int xx) {
      return img.at(std::clamp(yy, 0, n - 1), std::clamp(xx, 0, n - 1));
    };
    for (int y = oy; y < oy + 16; ++y)
      for (int x = ox; x < ox + 16; ++x) {
        const double gx = px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1) -
                          px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1);
        const double gy = px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1) -
                          px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1);
        acc += gx * gx + gy * gy;
      }
    return acc;
  };
  const Tensor fa = filter_naive(a, f);
  const Tensor fb = filter_naive(b, f);
  double num = 0.0, den = 0.0;
  for (int by = 0; by < 2; ++by)
    for (int bx = 0; bx < 2; ++bx) {
      const double la = sobel_sq(a, by * 16, bx * 16);
      const double lb = sobel_sq(b, by * 16, bx * 16);
      double da = 0.0, db = 0.0;
      for (int y = by * 16; y < (by + 1) * 16; ++y)
        for (int x = bx * 16; x < (bx + 1) * 16; ++x) {
          da += fa.at(y, x) * fa.at(y, x);
          db += fb.at(y, x) * fb.at(y, x);
        }
      num += la * (da / 256.0) + lb * (db / 256.0);
      den += la + lb;
    }
  const MetricReport r = evaluate(t.fused, t.vi, t.ir);
  CHECK(r.qcv == doctest::Approx(num / den).epsilon(1e-6));
}

TEST_CASE("vif of an identical pair is 1 within stabilizer slack") {
  const ImageRgb scene = testutil::synth_scene(64, 64, 88);
  const ImageGray gray(luminance(scene));
  const ImageRgb fused = replicate_gray(gray);
  const MetricReport r = evaluate(fused, fused, gray);
  CHECK(r.vif == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("batch evaluation and csv emission") {
  testutil::TempDir dir("metrics");
  namespace fs = std::filesystem;
  fs::create_directories(dir.file("fused"));
  fs::create_directories(dir.file("vi"));
  fs::create_directories(dir.file("ir"));

  SUBCASE("empty fused directory raises EmptyDataset") {
    CHECK_THROWS_AS(
        batch_evaluate(dir.file("fused"), dir.file("vi"), dir.file("ir")),
        EmptyDataset);
  }

  const Triple t = make_triple(32, 32, 40);
  save_image(t.fused, dir.file("fused/a.png"));
  save_image(t.vi, dir.file("vi/a.png"));
  save_image(t.ir, dir.file("ir/a.png"));

  SUBCASE("missing counterpart raises") {
    save_image(t.fused, dir.file("fused/b.png"));
    save_image(t.vi, dir.file("vi/b.png"));
    CHECK_THROWS_AS(
        batch_evaluate(dir.file("fused"), dir.file("vi"), dir.file("ir")),
        MissingCounterpart);
    fs::remove(dir.file("fused/b.png"));
    fs::remove(dir.file("vi/b.png"));
  }

  SUBCASE("single triple: one row, means equal that row") {
    const BatchEvaluation batch =
        batch_evaluate(dir.file("fused"), dir.file("vi"), dir.file("ir"));
    REQUIRE(batch.rows.size() == 1);
    CHECK(batch.rows[0].first == "a");
    CHECK(batch.mean.qg == batch.rows[0].second.qg);
    CHECK(batch.mean.scd == batch.rows[0].second.scd);

    const std::string csv = metrics_csv(batch);
    CHECK(csv.substr(0, 33) == "id,qg,qm,qs,qcv,vif,ssim,scd\na,0.");
    CHECK(csv.find("\nmean,") != std::string::npos);
    // Deterministic bytes.
    CHECK(csv == metrics_csv(batch_evaluate(dir.file("fused"), dir.file("vi"),
                                            dir.file("ir"))));
  }

  SUBCASE("two rows: mean of qg is the arithmetic mean") {
    const Triple t2 = make_triple(32, 32, 41);
    save_image(t2.fused, dir.file("fused/b.png"));
    save_image(t2.vi, dir.file("vi/b.png"));
    save_image(t2.ir, dir.file("ir/b.png"));
    const BatchEvaluation batch =
        batch_evaluate(dir.file("fused"), dir.file("vi"), dir.file("ir"));
    REQUIRE(batch.rows.size() == 2);
    CHECK(batch.mean.qg ==
          doctest::Approx(0.5 * (batch.rows[0].second.qg +
                                 batch.rows[1].second.qg)));
  }
}
