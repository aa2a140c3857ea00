#pragma once

#include <cstdint>
#include <utility>
#include <variant>

#include "pulmofuse/errors.hpp"
#include "pulmofuse/grid.hpp"

namespace pulmofuse {

enum class ElementKind : std::uint8_t { u8, i16, f32 };

const char* element_kind_name(ElementKind kind);
int bits_per_element(ElementKind kind);

struct Geometry {
  Spacing3 spacing{};
  Affine44 affine = identity_affine();
  bool operator==(const Geometry&) const = default;
};

// The universal voxel carrier: one dense grid of u8 / i16 / f32 elements
// plus spacing and the orientation affine.
class Volume {
 public:
  Volume() : grid_(MaskGrid{}) {}
  Volume(Grid3<std::uint8_t> grid, Geometry geom)
      : grid_(std::move(grid)), geom_(geom) {}
  Volume(Grid3<std::int16_t> grid, Geometry geom)
      : grid_(std::move(grid)), geom_(geom) {}
  Volume(Grid3<float> grid, Geometry geom)
      : grid_(std::move(grid)), geom_(geom) {}

  ElementKind kind() const {
    return static_cast<ElementKind>(grid_.index());
  }

  const Shape3& shape() const {
    return std::visit([](const auto& g) -> const Shape3& { return g.shape(); },
                      grid_);
  }
  std::size_t voxel_count() const { return shape().count(); }

  Geometry& geometry() { return geom_; }
  const Geometry& geometry() const { return geom_; }
  const Spacing3& spacing() const { return geom_.spacing; }

  Grid3<std::uint8_t>& u8() { return get<Grid3<std::uint8_t>>("u8"); }
  const Grid3<std::uint8_t>& u8() const { return get<Grid3<std::uint8_t>>("u8"); }
  Grid3<std::int16_t>& i16() { return get<Grid3<std::int16_t>>("i16"); }
  const Grid3<std::int16_t>& i16() const { return get<Grid3<std::int16_t>>("i16"); }
  Grid3<float>& f32() { return get<Grid3<float>>("f32"); }
  const Grid3<float>& f32() const { return get<Grid3<float>>("f32"); }

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), grid_);
  }

  // Value-preserving copy to float-32.
  FloatGrid to_f32() const {
    return visit([](const auto& g) {
      FloatGrid out(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i)
        out[i] = static_cast<float>(g[i]);
      return out;
    });
  }

  double value_at(std::size_t i) const {
    return visit([i](const auto& g) { return static_cast<double>(g[i]); });
  }

  bool operator==(const Volume&) const = default;

 private:
  template <class G>
  G& get(const char* want) {
    if (auto* g = std::get_if<G>(&grid_)) return *g;
    raise(Errc::wrong_element_kind,
          std::string("volume does not hold ") + want + " elements");
  }
  template <class G>
  const G& get(const char* want) const {
    return const_cast<Volume*>(this)->get<G>(want);
  }

  std::variant<Grid3<std::uint8_t>, Grid3<std::int16_t>, Grid3<float>> grid_;
  Geometry geom_;
};

// True iff every voxel is exactly 0 or 1.
bool mask_labels_valid(const Volume& v);

// Normalizes a {0,1}-valued volume of any element kind to a u8 mask.
// Raises shape_mismatch-free Errc::invalid_spec when other values occur.
MaskGrid to_mask(const Volume& v);

inline Volume make_mask_volume(MaskGrid mask, Geometry geom) {
  return Volume(std::move(mask), geom);
}

}  // namespace pulmofuse
