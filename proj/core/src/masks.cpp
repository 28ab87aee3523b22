#include "fcaide/masks.hpp"

#include <algorithm>
#include <stdexcept>

namespace fcaide {

namespace {

Tensor taps_to_mask(const std::vector<Offset>& taps) {
  Tensor mask(Shape{3, 3}, 0.0);
  for (const Offset& t : taps) {
    if (t.dr < -1 || t.dr > 1 || t.dc < -1 || t.dc > 1) {
      throw std::invalid_argument("mask tap outside the 3x3 window");
    }
    mask.at(static_cast<std::size_t>(t.dr + 1), static_cast<std::size_t>(t.dc + 1)) = 1.0;
  }
  return mask;
}

}  // namespace

std::string to_string(StreamClass kind) {
  switch (kind) {
    case StreamClass::Q: return "Q";
    case StreamClass::E: return "E";
    case StreamClass::D: return "D";
  }
  return "?";
}

bool MaskSpec::in_region(Offset r) const {
  switch (kind) {
    case StreamClass::Q: return r.dr < 0;
    case StreamClass::E: return (r.dr >= 0 && r.dc < 0) || (r.dr > 0 && r.dc == 0);
    case StreamClass::D: return r.dr >= 0 && r.dc > 0;
  }
  return false;
}

Tensor MaskSpec::stream_mask() const { return taps_to_mask(stream_taps); }
Tensor MaskSpec::input_mask() const { return taps_to_mask(input_taps); }

int MaskSpec::dilation(int layer) { return std::max(1, layer - 1); }

QedMasks canonical_masks() {
  MaskSpec q{StreamClass::Q,
             {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0}, {0, 1}},
             {{-1, -1}, {-1, 0}, {-1, 1}}};
  MaskSpec e{StreamClass::E,
             {{0, -1}, {0, 0}, {1, -1}, {1, 0}},
             {{0, -1}, {1, -1}, {1, 0}}};
  MaskSpec d{StreamClass::D,
             {{0, 0}, {0, 1}, {1, 0}, {1, 1}},
             {{0, 1}, {1, 1}}};
  return {q, e, d};
}

int receptive_field_extent(int layer) {
  if (layer < 1) throw std::invalid_argument("receptive_field_extent: layer must be >= 1");
  return 3 + layer * (layer - 1);
}

}  // namespace fcaide
