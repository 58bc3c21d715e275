#include "vwp/chargrid.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "vwp/errors.hpp"

namespace vwp {

namespace {

CharacterGrid dot_grid(const ImageSequenceRecord& seq,
                       const std::vector<const std::vector<double>*>& columns,
                       std::vector<std::string> column_ids) {
  const std::size_t n = seq.images.size();
  const std::size_t d = seq.feature_dim();
  CharacterGrid g;
  g.values = Tensor::matrix(n, columns.size());
  for (const auto& im : seq.images) {
    if (im.global_feat.size() != d) {
      fail(ErrorKind::kData, "sequence '" + seq.id + "': image feature dimension mismatch");
    }
    g.image_ids.push_back(im.image_id);
  }
  for (std::size_t b = 0; b < columns.size(); ++b) {
    if (columns[b]->size() != d) {
      fail(ErrorKind::kData, "sequence '" + seq.id + "': column '" + column_ids[b] +
                                 "' has dimension " + std::to_string(columns[b]->size()) +
                                 ", images have " + std::to_string(d));
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    const auto& i = seq.images[a].global_feat;
    for (std::size_t b = 0; b < columns.size(); ++b) {
      const auto& l = *columns[b];
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += i[k] * l[k];
      g.values(a, b) = s;
    }
  }
  g.column_ids = std::move(column_ids);
  return g;
}

}  // namespace

CharacterGrid compute_grid(const ImageSequenceRecord& seq) {
  std::vector<const std::vector<double>*> cols;
  std::vector<std::string> ids;
  for (const auto& c : seq.characters) {
    cols.push_back(&c.representative_feat);
    ids.push_back(c.char_id);
  }
  return dot_grid(seq, cols, std::move(ids));
}

CharacterGrid compute_object_grid(const ImageSequenceRecord& seq) {
  std::vector<const std::vector<double>*> cols;
  std::vector<std::string> ids;
  for (const auto& o : seq.objects) {
    cols.push_back(&o.feat);
    ids.push_back(o.object_id);
  }
  return dot_grid(seq, cols, std::move(ids));
}

CharacterGrid compute_entity_grid(const ImageSequenceRecord& seq) {
  std::vector<const std::vector<double>*> cols;
  std::vector<std::string> ids;
  for (const auto& c : seq.characters) {
    cols.push_back(&c.representative_feat);
    ids.push_back(c.char_id);
  }
  for (const auto& o : seq.objects) {
    cols.push_back(&o.feat);
    ids.push_back(o.object_id);
  }
  return dot_grid(seq, cols, std::move(ids));
}

std::vector<double> flatten_pad(const CharacterGrid& grid, std::size_t n_max, std::size_t m_max) {
  const std::size_t n = grid.values.rows();
  const std::size_t m = grid.values.rank() == 2 ? grid.values.cols() : 0;
  if (n > n_max || m > m_max) {
    fail(ErrorKind::kSize, "grid " + std::to_string(n) + "x" + std::to_string(m) +
                               " exceeds frame " + std::to_string(n_max) + "x" +
                               std::to_string(m_max));
  }
  std::vector<double> out(n_max * m_max, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < m; ++b) out[a * m_max + b] = grid.values(a, b);
  }
  return out;
}

std::vector<std::vector<int>> shade_buckets(const CharacterGrid& grid) {
  const std::size_t n = grid.images(), m = grid.columns();
  std::vector<std::vector<int>> buckets(n, std::vector<int>(m, 0));
  if (n == 0 || m == 0) return buckets;
  const auto data = grid.values.data();
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) return buckets;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const double t = (grid.values(a, b) - lo) / (hi - lo);
      buckets[a][b] = std::min(4, static_cast<int>(t * 5.0));
    }
  }
  return buckets;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

GridReport grid_report(const CharacterGrid& grid) {
  GridReport r;
  std::ostringstream csv;
  csv << "image_id";
  for (const auto& c : grid.column_ids) csv << ',' << c;
  csv << '\n';
  for (std::size_t a = 0; a < grid.images(); ++a) {
    csv << grid.image_ids[a];
    for (std::size_t b = 0; b < grid.columns(); ++b) csv << ',' << format_double(grid.values(a, b));
    csv << '\n';
  }
  r.csv = csv.str();

  // darker shade = higher similarity
  static constexpr const char* kShades[5] = {" ", ".", ":", "+", "#"};
  const auto buckets = shade_buckets(grid);
  std::size_t label_w = 5;
  for (const auto& id : grid.image_ids) label_w = std::max(label_w, id.size());
  std::size_t cell_w = 9;
  for (const auto& id : grid.column_ids) cell_w = std::max(cell_w, id.size());
  std::ostringstream tab;
  char buf[64];
  tab << std::string(label_w, ' ');
  for (const auto& id : grid.column_ids) {
    tab << "  " << std::string(cell_w - id.size(), ' ') << id;
  }
  tab << '\n';
  for (std::size_t a = 0; a < grid.images(); ++a) {
    tab << grid.image_ids[a] << std::string(label_w - grid.image_ids[a].size(), ' ');
    for (std::size_t b = 0; b < grid.columns(); ++b) {
      std::snprintf(buf, sizeof buf, "%*.3f", static_cast<int>(cell_w - 2), grid.values(a, b));
      const char* s = kShades[buckets[a][b]];
      tab << "  " << buf << s << s;
    }
    tab << '\n';
  }
  r.table = tab.str();
  return r;
}

CharacterGrid parse_grid_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  CharacterGrid g;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) fail(ErrorKind::kData, "empty grid CSV");
  auto header = split(line);
  if (header.empty() || header[0] != "image_id") fail(ErrorKind::kData, "grid CSV header");
  g.column_ids.assign(header.begin() + 1, header.end());
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) fail(ErrorKind::kData, "ragged grid CSV row");
    g.image_ids.push_back(cells[0]);
    for (std::size_t i = 1; i < cells.size(); ++i) values.push_back(std::stod(cells[i]));
  }
  g.values = Tensor({g.image_ids.size(), g.column_ids.size()}, std::move(values));
  return g;
}

}  // namespace vwp
