#include <gtest/gtest.h>

#include "mammo/enhancement.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mammo;

namespace {

FloatImage levels_image(int w, int h, std::uint64_t seed) {
    // Values k / 255 so the 256 bins and the distinct values coincide.
    Rng rng(seed);
    FloatImage f(w, h);
    for (auto& v : f.pixels()) v = static_cast<float>(rng.below(256)) / 255.0f;
    f[0] = 0.0f;
    f[1] = 1.0f;
    return f;
}

double max_abs_diff(const FloatImage& a, const FloatImage& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

}  // namespace

TEST(ClaheConfig, Validation) {
    EXPECT_THROW((ClaheConfig{0, 8, 0.01, 256}.validate()), ParameterError);
    EXPECT_THROW((ClaheConfig{8, 8, 0.0, 256}.validate()), ParameterError);
    EXPECT_THROW((ClaheConfig{8, 8, 1.5, 256}.validate()), ParameterError);
    EXPECT_THROW((ClaheConfig{8, 8, 0.01, 1}.validate()), ParameterError);
    EXPECT_NO_THROW((ClaheConfig{}.validate()));
}

TEST(Clahe, InputErrors) {
    EXPECT_THROW(clahe(FloatImage(4, 4), ClaheConfig{}), ParameterError);
    FloatImage f(16, 16, 0.5f);
    f[3] = 1.5f;
    EXPECT_THROW(clahe(f, ClaheConfig{}), ParameterError);
}

TEST(Clahe, ConstantImageUnchanged) {
    for (float c : {0.0f, 0.3f, 1.0f}) {
        const FloatImage f(40, 30, c);
        for (double clip : {0.01, 0.02, 1.0}) {
            const auto out = clahe(f, ClaheConfig{8, 8, clip, 256});
            EXPECT_LE(max_abs_diff(out, f), 1.0 / 256.0);
        }
    }
}

TEST(Clahe, OutputWithinUnitRange) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = fixture::texture(64, 48, seed, 2.0);
        for (double clip : {0.005, 0.01, 0.02, 0.5}) {
            const auto out = clahe(f, ClaheConfig{8, 8, clip, 256});
            for (auto v : out.pixels()) {
                ASSERT_GE(v, 0.0f);
                ASSERT_LE(v, 1.0f);
            }
        }
    }
}

TEST(Clahe, SingleTileNoClipIsGlobalEqualization) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = levels_image(37, 23, seed);
        const auto out = clahe(f, ClaheConfig{1, 1, 1.0, 256});
        EXPECT_LE(max_abs_diff(out, oracle::rank_equalize(f)), 1.0 / 256.0);
    }
}

TEST(Clahe, LowerClipAmplifiesLess) {
    // Lower clip limits flatten the tile histograms, which caps the slope of
    // every tile mapping and keeps the output closer to the input.
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto f = fixture::texture(128, 128, seed, 4.0);
        const auto low = clahe(f, ClaheConfig{8, 8, 0.01, 256});
        const auto high = clahe(f, ClaheConfig{8, 8, 0.02, 256});
        double d_low = 0, d_high = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            d_low += std::abs(low[i] - f[i]);
            d_high += std::abs(high[i] - f[i]);
        }
        EXPECT_LT(d_low, d_high) << "seed " << seed;
    }
}

TEST(Clahe, FlatHistogramIsNearIdentity) {
    // A tile whose histogram is already uniform maps each bin to (about) itself.
    FloatImage f(256, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 256; ++x) f.at(x, y) = static_cast<float>(x) / 255.0f;
    }
    const auto out = clahe(f, ClaheConfig{1, 1, 0.01, 256});
    EXPECT_LE(max_abs_diff(out, f), 1.0 / 255.0 + 1e-6);
}

TEST(SynthesizeChannels, PlanesAreNormalizedAndTwoClahes) {
    const auto f = fixture::texture(64, 64, 3);
    const auto planes = synthesize_channels(f);
    EXPECT_EQ(planes.channels[0], f);
    EXPECT_EQ(planes.channels[1], clahe(f, ClaheConfig{8, 8, 0.01, 256}));
    EXPECT_EQ(planes.channels[2], clahe(f, ClaheConfig{8, 8, 0.02, 256}));
}

TEST(SynthesizeChannels, Rgb8RoundTrip) {
    const auto planes = synthesize_channels(fixture::texture(32, 32, 4));
    const auto back = from_rgb8(to_rgb8(planes));
    for (int c = 0; c < 3; ++c) EXPECT_LE(max_abs_diff(back.channels[c], planes.channels[c]), 0.5 / 255.0 + 1e-6);
}

TEST(Clahe, MonotoneWithinSingleTile) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto f = fixture::texture(50, 40, seed, 2.0);
        for (double clip : {0.01, 0.02, 1.0}) {
            const auto out = clahe(f, ClaheConfig{1, 1, clip, 256});
            Rng rng(seed);
            for (int k = 0; k < 2000; ++k) {
                const auto a = rng.below(f.size()), b = rng.below(f.size());
                if (f[a] <= f[b]) {
                    ASSERT_LE(out[a], out[b]);
                }
            }
        }
    }
}

TEST(Clahe, FullyClippedIsNearIdentity) {
    // Every bin capped at one count leaves an almost flat histogram. Each
    // tile mapping then stays within one bin plus bins / N_tile of the
    // identity; 256 x 256 tiles make both terms 1/256.
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto f = fixture::texture(512, 512, seed, 3.0);
        const auto out = clahe(f, ClaheConfig{2, 2, 1e-9, 256});
        EXPECT_LE(max_abs_diff(out, f), 2.0 / 256.0 + 1e-6) << "seed " << seed;
    }
}

TEST(Clahe, TwoValuedImageClippedStaysCloserToInput) {
    FloatImage f(40, 40, 0.2f);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 40; ++x) f.at(x, y) = 0.8f;
    }
    const auto clipped = clahe(f, ClaheConfig{1, 1, 0.01, 256});
    const auto plain = clahe(f, ClaheConfig{1, 1, 1.0, 256});
    // Unclipped equalization sends the 90% level to the top of the range.
    EXPECT_NEAR(plain.at(0, 10), 0.2 + 0.6 * 0.9, 1.0 / 256.0);
    EXPECT_NEAR(plain.at(0, 0), 0.8, 1.0 / 256.0);
    EXPECT_LT(std::abs(clipped.at(0, 10) - 0.2f), std::abs(plain.at(0, 10) - 0.2f));
    EXPECT_LE(std::abs(clipped.at(0, 0) - 0.8f), 1.0 / 256.0);
}

TEST(SynthesizeChannels, ClaheRaisesLocalContrastOfFaintBlob) {
    FloatImage f(128, 128);
    const auto blob = fixture::ellipse_mask(128, 128, 64, 64, 14, 10);
    const auto tex = fixture::texture(128, 128, 21, 2.0);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.45f + 0.04f * tex[i] + (blob[i] ? 0.03f : 0.0f);
    const auto planes = synthesize_channels(f);
    const auto local_std = [&](const FloatImage& img) {
        double s = 0, s2 = 0;
        int n = 0;
        for (int y = 40; y < 88; ++y) {
            for (int x = 40; x < 88; ++x) {
                s += img.at(x, y);
                s2 += img.at(x, y) * img.at(x, y);
                ++n;
            }
        }
        return std::sqrt(s2 / n - (s / n) * (s / n));
    };
    const double c0 = local_std(planes.channels[0]);
    EXPECT_LE(c0, local_std(planes.channels[1]));
    EXPECT_LE(c0, local_std(planes.channels[2]));
}

TEST(SynthesizeChannels, ConstantInputGivesConstantPlanes) {
    const auto planes = synthesize_channels(FloatImage(32, 32, 0.4f));
    for (const auto& ch : planes.channels) {
        for (auto v : ch.pixels()) EXPECT_NEAR(v, 0.4f, 1.0 / 256.0);
    }
}
