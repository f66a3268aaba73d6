// Copyright 2026 The recistkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "recist/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace recist {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_numbers(const std::string& field, std::size_t expected, const std::string& column,
                                  int row) {
  std::vector<double> out;
  std::stringstream ss(field);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const std::string t = trim(tok);
    double v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
      throw InputFormatError("row " + std::to_string(row) + ": column " + column + ": not a number: '" + t + "'");
    out.push_back(v);
  }
  if (out.size() != expected)
    throw InputFormatError("row " + std::to_string(row) + ": column " + column + ": expected " +
                           std::to_string(expected) + " values, got " + std::to_string(out.size()));
  return out;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_numbers(std::initializer_list<double> vals) {
  std::string out;
  for (double v : vals) {
    if (!out.empty()) out += ", ";
    out += format_number(v);
  }
  return out;
}

void put_f32_le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float get_f32_le(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

LesionMeta RecistAnnotation::meta() const {
  LesionMeta m;
  m.lesion_type = lesion_type;
  m.long_diameter_mm = std::max(long_px, short_px) * spacing.x();
  m.slice_interval_mm = spacing.z();
  return m;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"': quoted = true; any = true; break;
      case ',': row.push_back(std::move(field)); field.clear(); any = true; break;
      case '\r': break;
      case '\n':
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        any = false;
        break;
      default: field += c; any = true;
    }
  }
  if (quoted) throw InputFormatError(path.string() + ": unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> read_exclusion_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputFormatError("cannot open exclusion list " + path.string());
  std::vector<std::string> keys;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    keys.push_back(t);
  }
  return keys;
}

ParseReport parse_annotations(const fs::path& csv_path, const std::optional<fs::path>& exclusion_list) {
  const auto rows = read_csv(csv_path);
  if (rows.empty()) throw InputFormatError(csv_path.string() + ": empty file");

  static const std::array<std::string, 7> required = {
      "File_name",          "Measurement_coordinates", "Bounding_boxes", "Coarse_lesion_type",
      "Lesion_diameters_Pixel_", "Spacing_mm_px_",     "Train_Val_Test"};
  std::array<std::size_t, 7> col{};
  for (std::size_t k = 0; k < required.size(); ++k) {
    const auto it = std::find_if(rows[0].begin(), rows[0].end(),
                                 [&](const std::string& h) { return trim(h) == required[k]; });
    if (it == rows[0].end()) throw InputFormatError(csv_path.string() + ": missing required column " + required[k]);
    col[k] = static_cast<std::size_t>(it - rows[0].begin());
  }

  std::vector<std::string> excluded;
  if (exclusion_list) excluded = read_exclusion_list(*exclusion_list);
  std::sort(excluded.begin(), excluded.end());

  ParseReport rep;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const int row_no = static_cast<int>(r);
    const auto& f = rows[r];
    if (f.size() < rows[0].size())
      throw InputFormatError("row " + std::to_string(row_no) + ": expected " + std::to_string(rows[0].size()) +
                             " fields, got " + std::to_string(f.size()));
    RecistAnnotation a;
    a.row = row_no;
    a.file_name = trim(f[col[0]]);
    if (a.file_name.empty()) throw InputFormatError("row " + std::to_string(row_no) + ": empty File_name");
    if (std::binary_search(excluded.begin(), excluded.end(), a.file_name)) {
      ++rep.n_excluded;
      continue;
    }

    const auto c = parse_numbers(f[col[1]], 8, required[1], row_no);
    const Point2d p0(c[0], c[1]), p1(c[2], c[3]), p2(c[4], c[5]), p3(c[6], c[7]);
    if ((p1 - p0).norm() >= (p3 - p2).norm())
      a.diameters = {p0, p1, p2, p3};
    else
      a.diameters = {p2, p3, p0, p1};

    const auto b = parse_numbers(f[col[2]], 4, required[2], row_no);
    a.bbox = {b[0], b[1], b[2], b[3]};

    const std::string type = trim(f[col[3]]);
    const auto t = parse_numbers(type, 1, required[3], row_no);
    a.lesion_type = static_cast<int>(t[0]);
    if (a.lesion_type != -1 && (a.lesion_type < 1 || a.lesion_type > 8))
      throw InputFormatError("row " + std::to_string(row_no) + ": Coarse_lesion_type out of range: " + type);

    const auto d = parse_numbers(f[col[4]], 2, required[4], row_no);
    a.long_px = std::max(d[0], d[1]);
    a.short_px = std::min(d[0], d[1]);

    const auto s = parse_numbers(f[col[5]], 3, required[5], row_no);
    a.spacing = Eigen::Vector3d(s[0], s[1], s[2]);

    const auto split = parse_numbers(f[col[6]], 1, required[6], row_no);
    switch (static_cast<int>(split[0])) {
      case 1: a.split = Split::Train; break;
      case 2: a.split = Split::Val; break;
      case 3: a.split = Split::Test; break;
      default: throw InputFormatError("row " + std::to_string(row_no) + ": Train_Val_Test must be 1, 2 or 3");
    }

    const auto ex = extremes_from_recist(a.diameters);
    if (ex.degenerate) rep.degenerate.push_back("row " + std::to_string(row_no) + " (" + a.file_name + ")");
    const auto expect = pad_bbox(bbox_from_extremes(ex.points), 5.0);
    const double err = std::max({std::abs(expect.x1 - a.bbox.x1), std::abs(expect.y1 - a.bbox.y1),
                                 std::abs(expect.x2 - a.bbox.x2), std::abs(expect.y2 - a.bbox.y2)});
    if (!(err <= kBoxConsistencyTol))
      rep.inconsistent.push_back("row " + std::to_string(row_no) + " (" + a.file_name +
                                 "): box differs from padded diameters by " + format_number(err) + " px");
    rep.annotations.push_back(std::move(a));
  }
  return rep;
}

void write_annotations(const fs::path& csv_path, const std::vector<RecistAnnotation>& annotations) {
  std::string out =
      "File_name,Measurement_coordinates,Bounding_boxes,Lesion_diameters_Pixel_,Coarse_lesion_type,"
      "Spacing_mm_px_,Train_Val_Test\n";
  for (const auto& a : annotations) {
    const auto& d = a.diameters;
    const int split = a.split == Split::Train ? 1 : a.split == Split::Val ? 2 : 3;
    out += quote_csv(a.file_name) + ",";
    out += quote_csv(join_numbers({d.long_a.x(), d.long_a.y(), d.long_b.x(), d.long_b.y(), d.short_a.x(),
                                   d.short_a.y(), d.short_b.x(), d.short_b.y()})) + ",";
    out += quote_csv(join_numbers({a.bbox.x1, a.bbox.y1, a.bbox.x2, a.bbox.y2})) + ",";
    out += quote_csv(join_numbers({a.long_px, a.short_px})) + ",";
    out += std::to_string(a.lesion_type) + ",";
    out += quote_csv(join_numbers({a.spacing.x(), a.spacing.y(), a.spacing.z()})) + ",";
    out += std::to_string(split) + "\n";
  }
  write_file_atomic(csv_path, out);
}

std::map<std::string, std::vector<RecistAnnotation>> group_by_image(const std::vector<RecistAnnotation>& anns) {
  std::map<std::string, std::vector<RecistAnnotation>> out;
  for (const auto& a : anns) out[a.file_name].push_back(a);
  return out;
}

std::string encode_heatmaps(const HeatmapBundle<float>& bundle, const json& provenance) {
  if (!bundle.same_shape()) throw std::invalid_argument("encode_heatmaps: planes differ in shape");
  const std::size_t h = static_cast<std::size_t>(bundle.rows());
  const std::size_t w = static_cast<std::size_t>(bundle.cols());
  json header = {{"height", h},
                 {"width", w},
                 {"stride", bundle.stride},
                 {"input_width", bundle.input_width},
                 {"input_height", bundle.input_height},
                 {"channel_names", kChannelNames},
                 {"payload_bytes", kNumChannels * h * w * 4}};
  if (!provenance.is_null()) header["provenance"] = provenance;

  std::string out;
  out.reserve(256 + kNumChannels * h * w * 4);
  out += kHeatmapMagic;
  out += '\n';
  out += header.dump();
  out += '\n';
  for (int c = 0; c < kNumChannels; ++c) {
    const auto& g = bundle.channel(c);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index k = 0; k < g.cols(); ++k) put_f32_le(out, g(r, k));
  }
  return out;
}

HeatmapBundle<float> decode_heatmaps(const std::string& bytes) {
  const std::string magic = std::string(kHeatmapMagic) + "\n";
  if (bytes.compare(0, magic.size(), magic) != 0) throw InputFormatError("bad magic: not an RKHM1 heatmap file");
  const auto eol = bytes.find('\n', magic.size());
  if (eol == std::string::npos) throw InputFormatError("truncated payload: header line not terminated");
  json header;
  try {
    header = json::parse(bytes.substr(magic.size(), eol - magic.size()));
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("bad header: ") + e.what());
  }
  long long h = 0, w = 0, payload = 0;
  HeatmapBundle<float> b;
  try {
    h = header.at("height").get<long long>();
    w = header.at("width").get<long long>();
    payload = header.at("payload_bytes").get<long long>();
    b.stride = header.at("stride").get<int>();
    b.input_width = header.at("input_width").get<int>();
    b.input_height = header.at("input_height").get<int>();
    const auto names = header.at("channel_names").get<std::vector<std::string>>();
    if (names.size() != kNumChannels || !std::equal(names.begin(), names.end(), kChannelNames.begin()))
      throw InputFormatError("bad header: unexpected channel_names");
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("bad header: ") + e.what());
  }
  if (h < 1 || w < 1 || b.stride < 1) throw InputFormatError("bad header: non-positive dimensions");
  const long long expected = static_cast<long long>(kNumChannels) * h * w * 4;
  if (payload != expected)
    throw InputFormatError("size mismatch: header declares " + std::to_string(payload) + " payload bytes, " +
                           std::to_string(h) + "x" + std::to_string(w) + " needs " + std::to_string(expected));
  const std::size_t start = eol + 1;
  const long long actual = static_cast<long long>(bytes.size() - start);
  if (actual < expected)
    throw InputFormatError("truncated payload: " + std::to_string(actual) + " of " + std::to_string(expected) +
                           " bytes");
  if (actual > expected)
    throw InputFormatError("size mismatch: " + std::to_string(actual - expected) + " trailing bytes");

  b = HeatmapBundle<float>(static_cast<int>(h), static_cast<int>(w), b.stride, b.input_width, b.input_height);
  const char* p = bytes.data() + start;
  for (int c = 0; c < kNumChannels; ++c) {
    auto& g = b.channel(c);
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index k = 0; k < w; ++k, p += 4) g(r, k) = get_f32_le(p);
  }
  return b;
}

void write_heatmaps(const fs::path& path, const HeatmapBundle<float>& bundle, const json& provenance) {
  write_file_atomic(path, encode_heatmaps(bundle, provenance));
}

void write_heatmaps(const fs::path& path, const HeatmapBundle<double>& bundle, const json& provenance) {
  write_heatmaps(path, bundle.cast<float>(), provenance);
}

HeatmapBundle<float> read_heatmaps(const fs::path& path) { return decode_heatmaps(read_file(path)); }

std::string to_string(Source s) { return s == Source::Original ? "original" : "flipped"; }

namespace {

json point_json(const Point2d& p) { return json::array({p.x(), p.y()}); }

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw InputFormatError("schema violation at " + path + ": " + what);
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "/" + key, "missing");
  return *it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected number");
  return v.get<double>();
}

Point2d point_at(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) schema_error(path, "expected [x, y]");
  return {number_at(v[0], path + "/0"), number_at(v[1], path + "/1")};
}

}  // namespace

json detections_to_json(const DetectionSet& dets, const json& config) {
  json images = json::object();
  for (const auto& [key, list] : dets) {
    json arr = json::array();
    for (const auto& d : list) {
      const auto& e = d.extremes;
      arr.push_back({{"score", d.score},
                     {"bbox", {d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2}},
                     {"source", to_string(d.source)},
                     {"extremes",
                      {{"top", point_json(e.top)},
                       {"left", point_json(e.left)},
                       {"bottom", point_json(e.bottom)},
                       {"right", point_json(e.right)},
                       {"center", point_json(e.center)}}}});
    }
    images[key] = std::move(arr);
  }
  json doc = {{"format", kDetectionsFormat}, {"images", std::move(images)}};
  if (!config.is_null()) doc["config"] = config;
  return doc;
}

DetectionSet detections_from_json(const json& doc) {
  const auto& fmt = member(doc, "format", "");
  if (!fmt.is_string() || fmt.get<std::string>() != kDetectionsFormat)
    schema_error("/format", "expected \"" + std::string(kDetectionsFormat) + "\"");
  const auto& images = member(doc, "images", "");
  if (!images.is_object()) schema_error("/images", "expected object");

  DetectionSet out;
  for (const auto& [key, arr] : images.items()) {
    const std::string ipath = "/images/" + key;
    if (!arr.is_array()) schema_error(ipath, "expected array");
    auto& list = out[key];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string dpath = ipath + "/" + std::to_string(i);
      const json& d = arr[i];
      Detection det;
      det.score = number_at(member(d, "score", dpath), dpath + "/score");
      const auto& bbox = member(d, "bbox", dpath);
      if (!bbox.is_array() || bbox.size() != 4) schema_error(dpath + "/bbox", "expected [x1, y1, x2, y2]");
      det.bbox = {number_at(bbox[0], dpath + "/bbox/0"), number_at(bbox[1], dpath + "/bbox/1"),
                  number_at(bbox[2], dpath + "/bbox/2"), number_at(bbox[3], dpath + "/bbox/3")};
      const auto& src = member(d, "source", dpath);
      if (src == "original")
        det.source = Source::Original;
      else if (src == "flipped")
        det.source = Source::Flipped;
      else
        schema_error(dpath + "/source", "expected \"original\" or \"flipped\"");
      const auto& ex = member(d, "extremes", dpath);
      const std::string epath = dpath + "/extremes";
      for (const char* role : {"top", "left", "bottom", "right", "center"}) {
        const Point2d p = point_at(member(ex, role, epath), epath + "/" + role);
        const std::string r = role;
        if (r == "top") det.extremes.top = p;
        else if (r == "left") det.extremes.left = p;
        else if (r == "bottom") det.extremes.bottom = p;
        else if (r == "right") det.extremes.right = p;
        else det.extremes.center = p;
      }
      list.push_back(det);
    }
  }
  return out;
}

void write_detections(const fs::path& path, const DetectionSet& dets, const json& config) {
  write_file_atomic(path, detections_to_json(dets, config).dump(1) + "\n");
}

DetectionSet read_detections(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputFormatError(path.string() + ": " + e.what());
  }
  return detections_from_json(doc);
}

std::vector<float> read_raw_f32(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() % 4 != 0) throw InputFormatError(path.string() + ": size is not a multiple of 4 bytes");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get_f32_le(bytes.data() + 4 * i);
  return out;
}

void write_raw_f32(const fs::path& path, const std::vector<float>& values) {
  std::string out;
  out.reserve(values.size() * 4);
  for (float v : values) put_f32_le(out, v);
  write_file_atomic(path, out);
}

}  // namespace recist
