#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mesh/kitchen/types.hpp"

namespace mesh::kitchen {

class LayoutParseError : public std::runtime_error {
 public:
  LayoutParseError(int row, int column, const std::string& what);

  int row() const { return row_; }
  int column() const { return column_; }

 private:
  int row_;
  int column_;
};

/// Static kitchen geometry. Rows are stored top to bottom; y grows south.
class Layout {
 public:
  Layout(std::string name, int width, int height, std::vector<CellKind> cells,
         std::array<Coord, 2> starts, std::array<Direction, 2> start_orientations);

  const std::string& name() const { return name_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(Coord c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  CellKind at(Coord c) const { return cells_[static_cast<std::size_t>(c.y * width_ + c.x)]; }
  bool is_floor(Coord c) const { return in_bounds(c) && at(c) == CellKind::Floor; }

  const std::array<Coord, 2>& start_positions() const { return starts_; }
  const std::array<Direction, 2>& start_orientations() const { return start_orientations_; }

  /// Pot cells in row-major order; a pot's index in WorldState::pots follows this order.
  const std::vector<Coord>& pots() const { return pots_; }
  int pot_index(Coord c) const;

  std::vector<Coord> cells_of(CellKind kind) const;
  std::vector<Coord> floor_cells() const { return cells_of(CellKind::Floor); }

  /// Renders back to the ASCII format accepted by load_layout.
  std::string to_text() const;

 private:
  std::string name_;
  int width_;
  int height_;
  std::vector<CellKind> cells_;
  std::array<Coord, 2> starts_;
  std::array<Direction, 2> start_orientations_;
  std::vector<Coord> pots_;
};

/// Parses the ASCII layout format: '.' floor, 'X' counter, 'P' pot,
/// 'O' onion dispenser, 'D' dish dispenser, 'S' serving window, '1'/'2'
/// player starts (on floor). Both players start facing north.
Layout load_layout(std::string_view source, std::string name = "custom");
Layout load_layout_file(const std::filesystem::path& path);

/// The five bundled kitchens, compiled in from layouts/*.layout.
const std::vector<std::string>& builtin_layout_names();
Layout builtin_layout(std::string_view name);
bool has_builtin_layout(std::string_view name);

}  // namespace mesh::kitchen
