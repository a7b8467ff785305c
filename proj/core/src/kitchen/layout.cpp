#include "mesh/kitchen/layout.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <utility>

namespace mesh::kitchen {

namespace {

struct BuiltinLayout {
  const char* name;
  const char* text;
};

// Generated by CMake from layouts/*.layout.
#include "builtin_layouts.inc"

std::string format_error(int row, int column, const std::string& what) {
  std::ostringstream os;
  os << "layout parse error at row " << row << ", column " << column << ": " << what;
  return os.str();
}

char glyph(CellKind k) {
  switch (k) {
    case CellKind::Floor: return '.';
    case CellKind::Counter: return 'X';
    case CellKind::Pot: return 'P';
    case CellKind::OnionDispenser: return 'O';
    case CellKind::DishDispenser: return 'D';
    case CellKind::ServingWindow: return 'S';
  }
  return '?';
}

}  // namespace

LayoutParseError::LayoutParseError(int row, int column, const std::string& what)
    : std::runtime_error(format_error(row, column, what)), row_(row), column_(column) {}

Layout::Layout(std::string name, int width, int height, std::vector<CellKind> cells,
               std::array<Coord, 2> starts, std::array<Direction, 2> start_orientations)
    : name_(std::move(name)),
      width_(width),
      height_(height),
      cells_(std::move(cells)),
      starts_(starts),
      start_orientations_(start_orientations) {
  if (width_ <= 0 || height_ <= 0 ||
      cells_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw std::invalid_argument("layout dimensions do not match cell count");
  }
  pots_ = cells_of(CellKind::Pot);
}

int Layout::pot_index(Coord c) const {
  auto it = std::find(pots_.begin(), pots_.end(), c);
  return it == pots_.end() ? -1 : static_cast<int>(it - pots_.begin());
}

std::vector<Coord> Layout::cells_of(CellKind kind) const {
  std::vector<Coord> out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (at({x, y}) == kind) out.push_back({x, y});
    }
  }
  return out;
}

std::string Layout::to_text() const {
  std::string out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      Coord c{x, y};
      if (c == starts_[0]) {
        out.push_back('1');
      } else if (c == starts_[1]) {
        out.push_back('2');
      } else {
        out.push_back(glyph(at(c)));
      }
    }
    out.push_back('\n');
  }
  return out;
}

Layout load_layout(std::string_view source, std::string name) {
  std::vector<std::string> rows;
  {
    std::string line;
    for (char ch : source) {
      if (ch == '\n') {
        rows.push_back(std::move(line));
        line.clear();
      } else if (ch != '\r') {
        line.push_back(ch);
      }
    }
    if (!line.empty()) rows.push_back(std::move(line));
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  if (rows.empty()) throw LayoutParseError(1, 1, "empty layout");

  const int height = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows.front().size());
  if (width == 0) throw LayoutParseError(1, 1, "empty first row");

  std::vector<CellKind> cells;
  cells.reserve(static_cast<std::size_t>(width * height));
  std::array<std::optional<Coord>, 2> starts;

  for (int y = 0; y < height; ++y) {
    const auto& row = rows[static_cast<std::size_t>(y)];
    if (static_cast<int>(row.size()) != width) {
      throw LayoutParseError(y + 1, static_cast<int>(std::min(row.size(), std::size_t(width))) + 1,
                             "ragged row: expected " + std::to_string(width) + " cells, found " +
                                 std::to_string(row.size()));
    }
    for (int x = 0; x < width; ++x) {
      const char ch = row[static_cast<std::size_t>(x)];
      CellKind kind;
      switch (ch) {
        case '.': kind = CellKind::Floor; break;
        case 'X': kind = CellKind::Counter; break;
        case 'P': kind = CellKind::Pot; break;
        case 'O': kind = CellKind::OnionDispenser; break;
        case 'D': kind = CellKind::DishDispenser; break;
        case 'S': kind = CellKind::ServingWindow; break;
        case '1':
        case '2': {
          auto& slot = starts[static_cast<std::size_t>(ch - '1')];
          if (slot) throw LayoutParseError(y + 1, x + 1, std::string("duplicate start marker '") + ch + "'");
          slot = Coord{x, y};
          kind = CellKind::Floor;
          break;
        }
        default:
          throw LayoutParseError(y + 1, x + 1, std::string("unknown cell character '") + ch + "'");
      }
      const bool border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
      if (border && kind == CellKind::Floor) {
        throw LayoutParseError(y + 1, x + 1, "border cell must not be floor");
      }
      cells.push_back(kind);
    }
  }

  for (int i = 0; i < 2; ++i) {
    if (!starts[static_cast<std::size_t>(i)]) {
      throw LayoutParseError(height, width, "missing start marker '" + std::to_string(i + 1) + "'");
    }
  }

  Layout layout(std::move(name), width, height, std::move(cells), {*starts[0], *starts[1]},
                {Direction::North, Direction::North});
  for (CellKind required : {CellKind::Pot, CellKind::OnionDispenser, CellKind::DishDispenser,
                            CellKind::ServingWindow}) {
    if (layout.cells_of(required).empty()) {
      throw LayoutParseError(height, width,
                             "missing required cell kind " + std::string(to_string(required)));
    }
  }
  return layout;
}

Layout load_layout_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open layout file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_layout(buffer.str(), path.stem().string());
}

const std::vector<std::string>& builtin_layout_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& b : kBuiltinLayouts) out.emplace_back(b.name);
    return out;
  }();
  return names;
}

bool has_builtin_layout(std::string_view name) {
  return std::any_of(std::begin(kBuiltinLayouts), std::end(kBuiltinLayouts),
                     [&](const BuiltinLayout& b) { return name == b.name; });
}

Layout builtin_layout(std::string_view name) {
  for (const auto& b : kBuiltinLayouts) {
    if (name == b.name) return load_layout(b.text, b.name);
  }
  throw std::invalid_argument("unknown layout '" + std::string(name) + "'");
}

}  // namespace mesh::kitchen
