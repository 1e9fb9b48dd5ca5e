#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "adaptcd/pipeline.hpp"
#include "fixtures.hpp"

namespace adaptcd {
namespace {

using testing::draw_circle;
using testing::inject_spot;
using testing::ring_frame;
using testing::ring_spec;
using testing::rotate90;

frame random_frame(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  frame f(w, h);
  for (double& v : f.intensities) v = u(rng);
  return f;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("adaptcd_pre_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(Standardize, ConstantTrainingMasksEverything) {
  const std::vector<frame> training(3, frame(4, 3, 0.25));
  const baseline b = standardize_fit(training);
  EXPECT_EQ(b.masked_count(), 12u);
  for (double s : b.std) EXPECT_EQ(s, std_floor);
  EXPECT_EQ(standardize_apply(b, frame(4, 3, 0.9)), Vector(12, 0.0));
}

TEST(Standardize, TwoPointSample) {
  const std::vector<frame> training{frame(1, 1, 0.0), frame(1, 1, 1.0)};
  const baseline b = standardize_fit(training);
  EXPECT_DOUBLE_EQ(b.mean[0], 0.5);
  EXPECT_NEAR(b.std[0], std::sqrt(0.5), 1e-15);
  EXPECT_FALSE(b.mask[0]);
}

TEST(Standardize, MatchesTwoPassOracle) {
  std::mt19937_64 rng(4);
  std::vector<frame> training;
  for (int i = 0; i < 6; ++i) training.push_back(random_frame(rng, 8, 8));
  const baseline b = standardize_fit(training);
  for (std::size_t p = 0; p < 64; ++p) {
    double mean = 0;
    for (const auto& f : training) mean += f.intensities[p];
    mean /= training.size();
    double ss = 0;
    for (const auto& f : training) ss += (f.intensities[p] - mean) * (f.intensities[p] - mean);
    EXPECT_NEAR(b.mean[p], mean, 1e-12);
    EXPECT_NEAR(b.std[p], std::sqrt(ss / (training.size() - 1)), 1e-12);
  }
}

TEST(Standardize, ApplyExamples) {
  const std::vector<frame> training{frame(2, 1, std::vector<double>{0.2, 0.4}),
                                    frame(2, 1, std::vector<double>{0.4, 0.8})};
  const baseline b = standardize_fit(training);
  const Vector at_mean = standardize_apply(b, frame(2, 1, std::vector<double>{0.3, 0.6}));
  EXPECT_NEAR(at_mean[0], 0.0, 1e-12);
  EXPECT_NEAR(at_mean[1], 0.0, 1e-12);
  const Vector above = standardize_apply(b, frame(2, 1, std::vector<double>{0.3 + b.std[0], 0.6}));
  EXPECT_NEAR(above[0], 1.0, 1e-12);
}

TEST(Standardize, TrainingFramesBecomeUnitScale) {
  std::mt19937_64 rng(8);
  std::vector<frame> training;
  for (int i = 0; i < 5; ++i) training.push_back(random_frame(rng, 6, 5));
  const auto r = preprocess_real_space(training, 5);
  for (std::size_t p = 0; p < 30; ++p) {
    double mean = 0, ss = 0;
    for (const auto& z : r.observations) mean += z[p];
    mean /= 5;
    for (const auto& z : r.observations) ss += (z[p] - mean) * (z[p] - mean);
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_NEAR(std::sqrt(ss / 4), 1.0, 1e-9);
  }
}

TEST(Standardize, Errors) {
  EXPECT_THROW(standardize_fit(std::vector<frame>{frame(2, 2, 0.1)}), data_error);
  EXPECT_THROW(standardize_fit(std::vector<frame>{frame(2, 2, 0.1), frame(2, 3, 0.1)}), data_error);
  const baseline b = standardize_fit(std::vector<frame>{frame(2, 2, 0.1), frame(2, 2, 0.2)});
  EXPECT_THROW(standardize_apply(b, frame(3, 2, 0.1)), data_error);
  EXPECT_THROW(preprocess_real_space(std::vector<frame>(3, frame(2, 2, 0.1)), 5), data_error);
}

TEST(Frame, RejectsOutOfRangeIntensity) {
  EXPECT_THROW(frame(2, 1, std::vector<double>{0.5, 1.5}), data_error);
  EXPECT_THROW(frame(2, 1, std::vector<double>{0.5, std::nan("")}), data_error);
  EXPECT_THROW(frame(2, 2, std::vector<double>{0.5}), data_error);
}

TEST(Histogram, ConstantFrameSingleBin) {
  const auto counts = intensity_histogram(frame(5, 4, 0.42), 16);
  EXPECT_EQ(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }), 1);
  EXPECT_EQ(counts[6], 20u);
}

TEST(Histogram, TwoLevels) {
  const auto counts = intensity_histogram(frame(2, 1, std::vector<double>{0.1, 0.9}), 10);
  for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(counts[j], (j == 1 || j == 9) ? 1u : 0u);
}

TEST(Histogram, MatchesNaiveBinning) {
  std::mt19937_64 rng(2);
  frame f = random_frame(rng, 30, 20);
  f.intensities[0] = 1.0;
  f.intensities[1] = 0.0;
  for (std::size_t bins : {2u, 7u, 256u}) {
    std::vector<std::size_t> want(bins, 0);
    for (double v : f.intensities) {
      std::size_t j = 0;
      while (j + 1 < bins && v >= static_cast<double>(j + 1) / bins) ++j;
      ++want[j];
    }
    const auto got = intensity_histogram(f, bins);
    EXPECT_EQ(got, want);
    std::size_t total = 0;
    for (auto c : got) total += c;
    EXPECT_EQ(total, f.size());
  }
  EXPECT_THROW(intensity_histogram(f, 1), config_error);
}

TEST(Gaps, NoEmptyBins) {
  const std::vector<std::size_t> counts{1, 2, 3};
  EXPECT_TRUE(find_gaps(counts, 1).empty());
}

TEST(Gaps, ReadOff) {
  const std::vector<std::size_t> counts{5, 0, 0, 0, 7};
  const auto gaps = find_gaps(counts, 2);
  ASSERT_EQ(gaps.size(), 1u);
  EXPECT_DOUBLE_EQ(gaps[0].lo, 0.2);
  EXPECT_DOUBLE_EQ(gaps[0].hi, 0.8);
  EXPECT_TRUE(find_gaps(counts, 4).empty());
  const auto bands = bands_between_gaps(counts, gaps);
  ASSERT_EQ(bands.size(), 2u);
  EXPECT_EQ(bands[0], (intensity_interval{0.0, 0.2}));
  EXPECT_EQ(bands[1], (intensity_interval{0.8, 1.0}));
}

TEST(Gaps, DisjointSortedAndEmpty) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::size_t> counts(64);
    for (auto& c : counts) c = rng() % 3 == 0 ? rng() % 5 : 0;
    const auto gaps = find_gaps(counts, 2);
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      EXPECT_LT(gaps[i].lo, gaps[i].hi);
      if (i > 0) {
        EXPECT_LT(gaps[i - 1].hi, gaps[i].lo);
      }
      const auto first = static_cast<std::size_t>(std::lround(gaps[i].lo * 64));
      const auto last = static_cast<std::size_t>(std::lround(gaps[i].hi * 64));
      EXPECT_GE(last - first, 2u);
      for (std::size_t j = first; j < last; ++j) EXPECT_EQ(counts[j], 0u);
    }
  }
}

TEST(Gaps, RingFixtureBandsIsolateLevels) {
  const std::vector<double> levels{0.1, 0.35, 0.6, 0.85};
  std::vector<ring_spec> rings;
  for (std::size_t i = 1; i < levels.size(); ++i) rings.push_back({10.0 * i, 1.5, levels[i]});
  const frame f = ring_frame(80, 80, 40, 40, rings, levels[0]);
  const auto counts = intensity_histogram(f, 256);
  const auto bands = bands_between_gaps(counts, find_gaps(counts, 3));
  ASSERT_EQ(bands.size(), levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (std::size_t j = 0; j < levels.size(); ++j) EXPECT_EQ(bands[i].contains(levels[j]), i == j);
}

TEST(BandThreshold, Examples) {
  std::mt19937_64 rng(5);
  const frame f = random_frame(rng, 9, 7);
  EXPECT_EQ(band_threshold(f, {0.0, 1.0}).count(), f.size());
  EXPECT_EQ(band_threshold(frame(3, 3, 0.5), {0.6, 0.7}).count(), 0u);
  EXPECT_THROW(band_threshold(f, {0.5, 0.5}), config_error);
  EXPECT_THROW(band_threshold(f, {-0.1, 0.5}), config_error);
}

TEST(BandThreshold, RingPixelsExactly) {
  const frame f = ring_frame(60, 60, 30, 30, {{12, 1.0, 0.5}, {22, 1.0, 0.9}}, 0.1);
  const binary_image img = band_threshold(f, {0.4, 0.6});
  for (std::size_t y = 0; y < 60; ++y)
    for (std::size_t x = 0; x < 60; ++x) EXPECT_EQ(img.at(x, y), f.at(x, y) == 0.5);
}

TEST(Hough, RecoversRasterizedCircle) {
  binary_image img(128, 128);
  draw_circle(img, 64, 64, 20);
  const auto r = hough_circle_center(img, {5, 0, 1});
  EXPECT_LE(std::abs(r.center.x - 64), 1.0);
  EXPECT_LE(std::abs(r.center.y - 64), 1.0);
  EXPECT_LE(std::abs(static_cast<double>(r.radius) - 20), 1.0);
  EXPECT_GT(r.votes, 0u);
}

TEST(Hough, OffCenterAndQuantized) {
  binary_image img(100, 90);
  draw_circle(img, 41.3, 47.8, 17.6);
  const auto fine = hough_circle_center(img, {5, 0, 1});
  EXPECT_LE(std::hypot(fine.center.x - 41.3, fine.center.y - 47.8), 1.0);
  const auto coarse = hough_circle_center(img, {4, 40, 2});
  EXPECT_LE(std::hypot(coarse.center.x - 41.3, coarse.center.y - 47.8), 2.0);
  EXPECT_LE(std::abs(static_cast<double>(coarse.radius) - 17.6), 2.0);
}

TEST(Hough, ConcentricBandsAgree) {
  const frame f = ring_frame(96, 96, 47, 50, {{14, 1.0, 0.5}, {30, 1.0, 0.9}}, 0.1);
  const auto inner = hough_circle_center(band_threshold(f, {0.4, 0.6}), {5, 0, 1});
  const auto outer = hough_circle_center(band_threshold(f, {0.8, 1.0}), {5, 0, 1});
  EXPECT_LE(std::abs(inner.center.x - outer.center.x), 1.0);
  EXPECT_LE(std::abs(inner.center.y - outer.center.y), 1.0);
  EXPECT_LE(std::abs(inner.center.x - 47), 1.0);
  EXPECT_LE(std::abs(outer.center.y - 50), 1.0);
}

TEST(Hough, TieGoesToSmallestRadiusThenRowThenColumn) {
  binary_image img(20, 20);
  img.set(10, 10);
  const auto r = hough_circle_center(img, {3, 5, 1});
  EXPECT_EQ(r.radius, 3u);
  EXPECT_EQ(r.votes, 1u);
  EXPECT_EQ(r.center.y, 7.0);
  EXPECT_EQ(r.center.x, 9.0);
}

TEST(Hough, Errors) {
  binary_image empty(32, 32);
  EXPECT_THROW(hough_circle_center(empty, {5, 0, 1}), data_error);
  binary_image one(32, 32);
  one.set(3, 3);
  EXPECT_THROW(hough_circle_center(one, {0, 0, 1}), config_error);
  EXPECT_THROW(hough_circle_center(one, {5, 17, 1}), config_error);
  EXPECT_THROW(hough_circle_center(one, {5, 10, 0}), config_error);
  EXPECT_THROW(hough_circle_center(one, {12, 10, 1}), config_error);
}

TEST(AverageCenters, Examples) {
  const std::vector<point> one{{3.5, -2}};
  EXPECT_EQ(average_centers(one).x, 3.5);
  EXPECT_EQ(average_centers(one).y, -2.0);
  const std::vector<point> two{{0, 0}, {2, 2}};
  EXPECT_EQ(average_centers(two).x, 1.0);
  EXPECT_EQ(average_centers(two).y, 1.0);
  EXPECT_THROW(average_centers(std::vector<point>{}), data_error);
}

TEST(AverageCenters, EightBandsRecoverCenter) {
  std::vector<ring_spec> rings;
  for (int i = 0; i < 8; ++i) rings.push_back({8.0 + 4.0 * i, 1.0, 0.16 + 0.11 * i});
  const frame f = ring_frame(100, 100, 49.4, 51.2, rings, 0.0);
  diffraction_config cfg;
  const auto g = fit_diffraction_geometry(f, cfg);
  EXPECT_EQ(g.band_centers.size(), 8u);
  EXPECT_LE(std::abs(g.center.x - 49.4), 1.0);
  EXPECT_LE(std::abs(g.center.y - 51.2), 1.0);
}

TEST(RingRadius, SingleRing) {
  const frame f = ring_frame(101, 101, 50, 50, {{30, 1.0, 0.8}}, 0.1);
  EXPECT_NEAR(static_cast<double>(largest_ring_radius(f, {50, 50}, 5)), 30.0, 1.0);
}

TEST(RingRadius, TwoRingsGiveOuter) {
  const frame f = ring_frame(101, 101, 50, 50, {{20, 1.0, 0.8}, {40, 1.0, 0.6}}, 0.1);
  EXPECT_NEAR(static_cast<double>(largest_ring_radius(f, {50, 50}, 5)), 40.0, 1.0);
}

TEST(RingRadius, IgnoresAnnuliCutByTheBorder) {
  frame f = ring_frame(101, 101, 50, 50, {{25, 1.0, 0.8}}, 0.1);
  f.at(0, 0) = 1.0;
  EXPECT_NEAR(static_cast<double>(largest_ring_radius(f, {50, 50}, 5)), 25.0, 1.0);
}

TEST(RingRadius, FlatFrameHasNoRing) {
  EXPECT_THROW(largest_ring_radius(frame(64, 64, 0.3), {32, 32}, 5), no_ring_found);
  EXPECT_THROW(largest_ring_radius(frame(64, 64, 0.3), {70, 32}, 5), config_error);
  EXPECT_THROW(largest_ring_radius(frame(64, 64, 0.3), {32, 32}, 0), config_error);
}

TEST(RadialProfile, MeansPerIntegerRadius) {
  const frame f = ring_frame(41, 41, 20, 20, {{10, 0.5, 1.0}}, 0.0);
  const auto profile = radial_profile(f, {20, 20});
  EXPECT_EQ(profile[0], 0.0);
  EXPECT_EQ(profile[10], 1.0);
  EXPECT_EQ(profile[5], 0.0);
}

TEST(AngularSignal, ConstantFrame) {
  const auto s = angular_signal(frame(81, 81, 0.375), {40, 40}, 30, 2);
  for (std::size_t a = 0; a < 360; ++a) EXPECT_DOUBLE_EQ(s.values[a], 0.375);
}

TEST(AngularSignal, SpotAt171) {
  frame f(101, 101, 0.2);
  inject_spot(f, 50, 50, 30, 2, 171, 0.9);
  EXPECT_EQ(angular_signal(f, {50, 50}, 30, 2).argmax(), 171u);
}

TEST(AngularSignal, AngleConvention) {
  frame f(101, 101, 0.2);
  f.at(50, 20) = 1.0;  // straight up in the image
  EXPECT_EQ(angular_signal(f, {50, 50}, 30, 0.5).argmax(), 90u);
  frame g(101, 101, 0.2);
  g.at(80, 50) = 1.0;
  EXPECT_EQ(angular_signal(g, {50, 50}, 30, 0.5).argmax(), 0u);
}

TEST(AngularSignal, RotationShiftsArgmax) {
  for (double a : {0.0, 37.0, 171.0, 300.0}) {
    frame f(101, 101, 0.2);
    inject_spot(f, 50, 50, 30, 2, a, 0.9);
    const auto before = angular_signal(f, {50, 50}, 30, 2).argmax();
    const auto after = angular_signal(rotate90(f), {50, 50}, 30, 2).argmax();
    EXPECT_EQ(after, (before + 90) % 360) << a;
  }
}

TEST(AngularSignal, EmptyDegreesTakeAnnulusMean) {
  frame f(41, 41, 0.5);
  f.at(30, 20) = 1.0;
  const auto s = angular_signal(f, {20, 20}, 10, 0);
  std::size_t empty = 0;
  for (std::size_t a = 0; a < 360; ++a) empty += s.empty[a];
  EXPECT_GT(empty, 0u);
  for (std::size_t a = 0; a < 360; ++a)
    if (s.empty[a]) {
      EXPECT_GT(s.values[a], 0.5);
    }
}

TEST(AngularSignal, Errors) {
  EXPECT_THROW(angular_signal(frame(40, 40, 0.1), {20, 20}, 19, 2), data_error);
  EXPECT_THROW(angular_signal(frame(40, 40, 0.1), {20, 20}, 0, 2), config_error);
  EXPECT_THROW(angular_signal(frame(40, 40, 0.1), {20, 20}, 5, -1), config_error);
}

std::vector<frame> diffraction_sequence(std::size_t n, std::size_t spot_from) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);
  std::vector<frame> frames;
  for (std::size_t i = 0; i < n; ++i) {
    const double dim = jitter(rng);
    frame f = ring_frame(96, 96, 48, 48, {{15, 1.0, 0.5 + dim}, {30, 1.0, 0.8 + dim}}, 0.1 + dim);
    if (i >= spot_from) inject_spot(f, 48, 48, 33, 2, 171, 1.0);
    frames.push_back(std::move(f));
  }
  return frames;
}

TEST(Pipeline, DiffractionGeometryAndSpot) {
  const auto frames = diffraction_sequence(10, 5);
  const auto r = preprocess_diffraction(frames, 5, diffraction_config{});
  EXPECT_LE(std::abs(r.geometry.center.x - 48), 1.0);
  EXPECT_LE(std::abs(r.geometry.center.y - 48), 1.0);
  EXPECT_NEAR(static_cast<double>(r.geometry.ring_radius), 30.0, 1.0);
  EXPECT_EQ(r.geometry.probe_radius, r.geometry.ring_radius + 3.0);
  ASSERT_EQ(r.observations.size(), 10u);
  for (const auto& z : r.observations) EXPECT_EQ(z.size(), 360u);
  for (std::size_t t = 5; t < 10; ++t) {
    const auto& z = r.observations[t];
    EXPECT_EQ(std::max_element(z.begin(), z.end()) - z.begin(), 171);
  }
}

TEST(Pipeline, DiffractionDeterministic) {
  const auto frames = diffraction_sequence(7, 100);
  const auto a = preprocess_diffraction(frames, 5, diffraction_config{});
  const auto b = preprocess_diffraction(frames, 5, diffraction_config{});
  EXPECT_EQ(a.observations, b.observations);
  for (std::size_t i = 0; i < a.signals.size(); ++i) EXPECT_EQ(a.signals[i].values, b.signals[i].values);
}

TEST(Pipeline, RealSpaceShapes) {
  std::mt19937_64 rng(1);
  std::vector<frame> frames;
  for (int i = 0; i < 8; ++i) frames.push_back(random_frame(rng, 7, 3));
  const auto r = preprocess_real_space(frames, 5);
  EXPECT_EQ(r.fitted.training_frames, 5u);
  ASSERT_EQ(r.observations.size(), 8u);
  EXPECT_EQ(r.observations[6], standardize_apply(r.fitted, frames[6]));
  EXPECT_EQ(r.observations[0].size(), 21u);
}

TEST(Io, PgmRoundTrip) {
  std::mt19937_64 rng(6);
  frame f(13, 5);
  for (double& v : f.intensities) v = static_cast<double>(rng() % 256) / 255.0;
  std::stringstream ss;
  write_pgm(ss, f);
  EXPECT_EQ(read_pgm(ss).intensities, f.intensities);

  frame g(4, 4);
  for (double& v : g.intensities) v = static_cast<double>(rng() % 65536) / 65535.0;
  std::stringstream ss16;
  write_pgm(ss16, g, 65535);
  EXPECT_EQ(read_pgm(ss16).intensities, g.intensities);
}

TEST(Io, PgmRejectsGarbage) {
  std::stringstream p2("P2\n2 2\n255\n0 0 0 0\n");
  EXPECT_THROW(read_pgm(p2), data_error);
  std::stringstream short_body("P5\n4 4\n255\nabc");
  EXPECT_THROW(read_pgm(short_body), data_error);
}

TEST(Io, RawFramesRoundTrip) {
  std::vector<frame> frames{frame(3, 2, 0.25), frame(3, 2, 0.5), frame(3, 2, std::vector<double>{0, 1, 0.75, 0.125, 0.5, 0})};
  std::stringstream ss;
  write_raw_frames(ss, frames);
  const auto back = read_raw_frames(ss);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i].intensities, frames[i].intensities);
}

TEST(Io, BaselineRoundTrip) {
  std::mt19937_64 rng(7);
  std::vector<frame> training{random_frame(rng, 5, 4), random_frame(rng, 5, 4), frame(5, 4, 0.5)};
  training[0].intensities[3] = training[1].intensities[3] = training[2].intensities[3] = 0.5;
  const baseline b = standardize_fit(training);
  std::stringstream ss;
  save_baseline(ss, b);
  const baseline back = load_baseline(ss);
  EXPECT_EQ(back.width, 5u);
  EXPECT_EQ(back.height, 4u);
  EXPECT_EQ(back.mask, b.mask);
  EXPECT_TRUE(back.mask[3]);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(back.mean[i], static_cast<double>(static_cast<float>(b.mean[i])));
    EXPECT_EQ(back.std[i], static_cast<double>(static_cast<float>(b.std[i])));
  }
}

TEST(Io, DirectoryInFilenameOrder) {
  const auto dir = scratch_dir("order");
  write_pgm(dir / "b.pgm", frame(2, 2, 1.0));
  write_pgm(dir / "a.pgm", frame(2, 2, 0.0));
  const std::vector<frame> raw{frame(2, 2, 0.5), frame(2, 2, 0.25)};
  write_raw_frames(dir / "c.raw", raw);
  std::ofstream(dir / "notes.txt") << "ignored";
  const auto frames = load_frame_directory(dir);
  ASSERT_EQ(frames.size(), 4u);
  EXPECT_EQ(frames[0].intensities[0], 0.0);
  EXPECT_EQ(frames[1].intensities[0], 1.0);
  EXPECT_EQ(frames[2].intensities[0], 0.5);
  EXPECT_EQ(frames[3].intensities[0], 0.25);

  write_pgm(dir / "d.pgm", frame(3, 2, 0.0));
  EXPECT_THROW(load_frame_directory(dir), data_error);
  EXPECT_THROW(load_frame_directory(scratch_dir("empty")), data_error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace adaptcd
