#include "pulmofuse/volume.hpp"

namespace pulmofuse {

const char* element_kind_name(ElementKind kind) {
  switch (kind) {
    case ElementKind::u8: return "u8";
    case ElementKind::i16: return "i16";
    case ElementKind::f32: return "f32";
  }
  return "?";
}

int bits_per_element(ElementKind kind) {
  switch (kind) {
    case ElementKind::u8: return 8;
    case ElementKind::i16: return 16;
    case ElementKind::f32: return 32;
  }
  return 0;
}

bool mask_labels_valid(const Volume& v) {
  return v.visit([](const auto& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = static_cast<double>(g[i]);
      if (x != 0.0 && x != 1.0) return false;
    }
    return true;
  });
}

MaskGrid to_mask(const Volume& v) {
  if (!mask_labels_valid(v))
    raise(Errc::invalid_spec, "volume contains values other than {0, 1}");
  return v.visit([](const auto& g) {
    MaskGrid out(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i)
      out[i] = g[i] != 0 ? std::uint8_t{1} : std::uint8_t{0};
    return out;
  });
}

}  // namespace pulmofuse
