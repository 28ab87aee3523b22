#pragma once

#include <array>
#include <compare>
#include <string>
#include <vector>

#include "fcaide/tensor.hpp"

namespace fcaide {

/// The three masked filter classes of Block 1.
enum class StreamClass { Q, E, D };

std::string to_string(StreamClass kind);

/// Row/column offset relative to an output pixel; dr < 0 is north.
struct Offset {
  int dr = 0;
  int dc = 0;
  friend auto operator<=>(const Offset&, const Offset&) = default;
};

/// Region predicate plus the 3x3 tap sets of one filter class.
///
/// Regions of the three classes partition the plane minus the origin:
///   Q: dr < 0
///   E: (dr >= 0, dc < 0) or (dr > 0, dc = 0)
///   D: dr >= 0, dc > 0
/// Stream taps read the class's own previous feature map (scaled by the layer
/// dilation); input taps read the raw image at layer 1 and lie strictly
/// inside the region.
struct MaskSpec {
  StreamClass kind = StreamClass::Q;
  std::vector<Offset> stream_taps;
  std::vector<Offset> input_taps;

  bool in_region(Offset r) const;
  Tensor stream_mask() const;
  Tensor input_mask() const;

  /// Dilation used by Block-1 layer `layer` (1-based): max(1, layer - 1).
  static int dilation(int layer);
};

using QedMasks = std::array<MaskSpec, 3>;

QedMasks canonical_masks();

/// Side k of the context window C_{k x k} seen by a combined map at layer l:
/// 3 + l(l-1).
int receptive_field_extent(int layer);

}  // namespace fcaide
