#include <gtest/gtest.h>

#include <set>

#include "fcaide/masks.hpp"
#include "fcaide/network.hpp"
#include "fcaide/verification.hpp"
#include "textures.hpp"

using namespace fcaide;
using fcaide::testing::random_tensor;
using fcaide::testing::randomized_network;

namespace {

const MaskSpec& spec_of(const QedMasks& m, StreamClass k) {
  for (const MaskSpec& s : m) {
    if (s.kind == k) return s;
  }
  throw std::logic_error("missing class");
}

}  // namespace

TEST(Masks, RegionsPartitionThePuncturedWindow) {
  const QedMasks masks = canonical_masks();
  int covered = 0;
  for (int dr = -2; dr <= 2; ++dr) {
    for (int dc = -2; dc <= 2; ++dc) {
      int hits = 0;
      for (const MaskSpec& m : masks) hits += m.in_region({dr, dc});
      if (dr == 0 && dc == 0) {
        EXPECT_EQ(hits, 0);
      } else {
        EXPECT_EQ(hits, 1) << dr << "," << dc;
        ++covered;
      }
    }
  }
  EXPECT_EQ(covered, 24);
}

TEST(Masks, TapsRespectTheirRegions) {
  for (const MaskSpec& m : canonical_masks()) {
    for (Offset t : m.input_taps) EXPECT_TRUE(m.in_region(t)) << to_string(m.kind);
    // Shift closure: moving any region offset by a stream tap stays inside
    // the region, so stacking layers never leaks outside it.
    for (Offset s : m.stream_taps) {
      for (int dr = -3; dr <= 3; ++dr) {
        for (int dc = -3; dc <= 3; ++dc) {
          if (!m.in_region({dr, dc})) continue;
          EXPECT_TRUE(m.in_region({dr + s.dr, dc + s.dc})) << to_string(m.kind) << " " << s.dr << "," << s.dc;
        }
      }
    }
  }
  const QedMasks masks = canonical_masks();
  for (Offset t : spec_of(masks, StreamClass::Q).stream_taps) EXPECT_LE(t.dr, 0);
  EXPECT_EQ(spec_of(masks, StreamClass::Q).stream_taps.size(), 6u);
  EXPECT_EQ(spec_of(masks, StreamClass::E).stream_taps.size(), 4u);
  EXPECT_EQ(spec_of(masks, StreamClass::D).stream_taps.size(), 4u);
  EXPECT_EQ(spec_of(masks, StreamClass::Q).input_taps.size(), 3u);
  EXPECT_EQ(spec_of(masks, StreamClass::E).input_taps.size(), 3u);
  EXPECT_EQ(spec_of(masks, StreamClass::D).input_taps.size(), 2u);
}

TEST(Masks, MaskTensorsMatchTaps) {
  for (const MaskSpec& m : canonical_masks()) {
    const Tensor s = m.stream_mask();
    const Tensor in = m.input_mask();
    double ns = 0, ni = 0;
    for (double v : s.values()) ns += v;
    for (double v : in.values()) ni += v;
    EXPECT_EQ(ns, static_cast<double>(m.stream_taps.size()));
    EXPECT_EQ(ni, static_cast<double>(m.input_taps.size()));
    EXPECT_EQ(in.at(1, 1), 0.0);
    for (Offset t : m.stream_taps) EXPECT_EQ(s.at(t.dr + 1, t.dc + 1), 1.0);
  }
}

TEST(Masks, DilationAndReceptiveField) {
  EXPECT_EQ(MaskSpec::dilation(1), 1);
  EXPECT_EQ(MaskSpec::dilation(2), 1);
  EXPECT_EQ(MaskSpec::dilation(5), 4);
  EXPECT_EQ(receptive_field_extent(1), 3);
  EXPECT_EQ(receptive_field_extent(3), 9);
  EXPECT_EQ(receptive_field_extent(10), 93);
  EXPECT_THROW(receptive_field_extent(0), std::invalid_argument);
  // Reach accumulates as 1 + sum of dilations.
  for (int l = 1; l <= 10; ++l) {
    int reach = 1;
    for (int j = 2; j <= l; ++j) reach += MaskSpec::dilation(j);
    EXPECT_EQ(receptive_field_extent(l), 2 * reach + 1);
  }
}

TEST(Network, InitializationIsDeterministic) {
  const NetworkConfig cfg{3, 6, 2, 5};
  const NetworkParams a = build_network(cfg, 17);
  const NetworkParams b = build_network(cfg, 17);
  const NetworkParams c = build_network(cfg, 18);
  EXPECT_EQ(a.tensors, b.tensors);
  EXPECT_NE(a.tensors, c.tensors);
}

TEST(Network, HeadsFollowDegree) {
  for (int d : {1, 2}) {
    const NetworkParams p = build_network({2, 4, d, 4}, 1);
    int heads = 0;
    for (const auto& [name, t] : p.tensors) heads += name.ends_with(".kernel") && name.starts_with("block3.head");
    EXPECT_EQ(heads, d + 1);
    EXPECT_EQ(forward(p, random_tensor({6, 6}, 2)).a.size(), static_cast<std::size_t>(d + 1));
  }
  EXPECT_THROW(build_network({2, 4, 3, 4}, 1), std::invalid_argument);
  EXPECT_THROW(build_network({0, 4, 2, 4}, 1), std::invalid_argument);
}

TEST(Network, ParameterCountsAreStable) {
  // Paper-scale configuration: 10 layers, 64 channels, quadratic map.
  const NetworkConfig full_size{10, 64, 2, 64};
  const NetworkParams p = build_network(full_size, 0);
  // Stored: layer 1 streams 3*(64*9 + 128), layers 2..10 streams
  // 9*3*(64*64*9 + 128), Block-2 10*(64 + 2*(64*64 + 64) + 64), Block-3
  // ResNet 2*(64*64 + 64) + 64, heads 3*65.
  EXPECT_EQ(p.stored_scalars(), 1093955u);
  // Unmasked taps only: 8 input taps at layer 1, 14 stream taps per later layer.
  EXPECT_EQ(trainable_parameter_count(full_size), 896u + 9u * (64u * 64u * 14u + 384u) + 84480u + 8384u + 195u);
  EXPECT_EQ(trainable_parameter_count(full_size), 613507u);
  std::size_t from_layout = 0;
  for (const auto& [name, shape] : parameter_layout(full_size)) from_layout += shape_size(shape);
  EXPECT_EQ(from_layout, p.stored_scalars());
}

TEST(Network, MaskedKernelEntriesStartAtZero) {
  const NetworkParams p = build_network({3, 4, 2, 4}, 5);
  const QedMasks masks = canonical_masks();
  for (int l = 1; l <= 3; ++l) {
    for (const MaskSpec& m : masks) {
      const Tensor& k = p.at("block1.layer" + std::to_string(l) + "." + to_string(m.kind) + ".kernel");
      const Tensor mask = l == 1 ? m.input_mask() : m.stream_mask();
      for (std::size_t i = 0; i < k.size(); ++i) {
        if (mask[i % 9] == 0.0) {
          EXPECT_EQ(k[i], 0.0);
        } else {
          EXPECT_NE(k[i], 0.0);
        }
      }
    }
  }
}

TEST(Network, TapedAndValueForwardAgree) {
  const NetworkParams p = randomized_network({3, 5, 2, 4}, 9);
  const Tensor z = random_tensor({9, 7}, 10, 0.0, 1.0);
  Tape tape;
  const BoundParams bound = bind_parameters(tape, p, true);
  const std::vector<Var> a = forward(tape, bound, p.config, tape.constant(z));
  const CoefficientMaps v = forward(p, z);
  ASSERT_EQ(a.size(), v.a.size());
  for (std::size_t m = 0; m < a.size(); ++m) {
    EXPECT_EQ(a[m].value(), v.a[m]);
    EXPECT_EQ(v.a[m].shape(), (Shape{9, 7}));
  }
}

TEST(Network, OnePixelImageSeesOnlyPadding) {
  const NetworkParams p = randomized_network({3, 4, 2, 4}, 3);
  const CoefficientMaps a = forward(p, Tensor({1, 1}, 0.8));
  const CoefficientMaps zero = forward(p, Tensor({1, 1}, 0.0));
  for (std::size_t m = 0; m < a.a.size(); ++m) {
    EXPECT_EQ(a.a[m].shape(), (Shape{1, 1}));
    EXPECT_EQ(a.a[m], zero.a[m]);
  }
}

TEST(Network, ForwardRejectsDegreeMismatch) {
  NetworkParams p = build_network({2, 4, 2, 4}, 1);
  NetworkConfig claimed = p.config;
  claimed.degree = 1;
  Tape tape;
  const BoundParams bound = bind_parameters(tape, p, false);
  EXPECT_THROW(forward(tape, bound, claimed, tape.constant(Tensor({4, 4}))), std::exception);
  p.tensors.erase("block3.head2.kernel");
  EXPECT_THROW(forward(p, Tensor({4, 4})), std::exception);
}

TEST(Network, CoefficientsNeverDependOnTheirOwnPixel) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const NetworkParams p = randomized_network({3, 4, 2, 3}, seed);
    Rng rng(seed);
    const ProbeResult r = independence_probe(p, random_tensor({7, 9}, seed, 0.0, 1.0), 1000, rng);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.worst, 0.0);
    EXPECT_EQ(r.probed_pixels, 63u);
  }
}

TEST(Network, MasksAreNotOverRestrictive) {
  // Within the receptive field some neighbor must influence the coefficient.
  const NetworkParams p = randomized_network({2, 4, 2, 4}, 4);
  const Tensor z = random_tensor({9, 9}, 5, 0.0, 1.0);
  Tape tape;
  Var in = tape.variable(z, "z");
  const std::vector<Var> a = forward(tape, bind_parameters(tape, p, false), p.config, in);
  const std::size_t center = 4 * 9 + 4;
  for (const Var& am : a) {
    const Tensor g = tape.backward(tape.element(am, center)).of(in);
    EXPECT_EQ(g[center], 0.0);
    std::size_t nonzero = 0;
    for (std::size_t r = 2; r <= 6; ++r) {
      for (std::size_t c = 2; c <= 6; ++c) nonzero += g.at(r, c) != 0.0;
    }
    EXPECT_EQ(nonzero, 24u);
  }
}

TEST(Network, StreamsArePure) {
  // Each stream at pixel i may only depend on inputs inside its own region.
  const NetworkParams p = randomized_network({3, 3, 2, 3}, 6);
  const std::size_t n = 11;
  const Tensor z = random_tensor({n, n}, 7, 0.0, 1.0);
  Tape tape;
  Var in = tape.variable(z, "z");
  ForwardTrace trace;
  forward(tape, bind_parameters(tape, p, false), p.config, in, canonical_masks(), &trace);
  const QedMasks masks = canonical_masks();
  const long i = 5;
  for (std::size_t l = 0; l < trace.streams.size(); ++l) {
    for (std::size_t s = 0; s < 3; ++s) {
      Var feat = trace.streams[l][s];
      const std::size_t idx = static_cast<std::size_t>(i * static_cast<long>(n) + i);  // channel 0
      const Tensor g = tape.backward(tape.element(feat, idx)).of(in);
      for (long r = 0; r < static_cast<long>(n); ++r) {
        for (long c = 0; c < static_cast<long>(n); ++c) {
          if (g.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) != 0.0) {
            EXPECT_TRUE(masks[s].in_region({static_cast<int>(r - i), static_cast<int>(c - i)}))
                << "layer " << l + 1 << " stream " << s << " at " << r << "," << c;
          }
        }
      }
    }
  }
}

TEST(ResnetModule, ZeroBranchIsIdentityAndGradientsReachBothPaths) {
  NetworkParams p = randomized_network({1, 4, 1, 3}, 8);
  const Tensor x = random_tensor({4, 3, 3}, 9);
  {
    NetworkParams zeroed = p;
    for (auto& [name, t] : zeroed.tensors) {
      if (name.starts_with("block3.res.conv")) t.fill(0.0);
    }
    Tape tape;
    Var out = resnet_module(tape, bind_parameters(tape, zeroed, false), "block3.res", tape.constant(x));
    EXPECT_EQ(out.value(), x);
  }
  Tape tape;
  const BoundParams bound = bind_parameters(tape, p, true);
  Var in = tape.variable(x, "x");
  Var out = resnet_module(tape, bound, "block3.res", in);
  EXPECT_EQ(out.shape(), x.shape());
  const Gradients g = tape.backward(tape.reduce_sum(tape.square(out)));
  bool branch = false;
  for (double v : g.at("block3.res.conv1.kernel").values()) branch |= v != 0.0;
  EXPECT_TRUE(branch);
  bool skip = false;
  for (double v : g.at("x").values()) skip |= v != 0.0;
  EXPECT_TRUE(skip);
}
