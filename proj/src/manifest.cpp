#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "irsynth/dataset.hpp"

namespace irsynth {
namespace {

constexpr const char* kColumns[] = {"kind",  "output_id", "source_id", "parent_id", "alpha",  "target_id",   "beta",
                                     "image", "mask",      "fg_pixels", "anchor",    "noise_source", "noise_rect"};
constexpr std::size_t kColumnCount = std::size(kColumns);

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::validation, "manifest: " + what); }

long long parse_int(const std::string& s, const std::string& field) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad("field " + field + " is not an integer: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& field) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad("field " + field + " is not an unsigned integer: '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const std::string& field) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad("field " + field + " is not a number: '" + s + "'");
  return v;
}

std::string opt_rect(const std::optional<Rect>& r) { return r ? to_string(*r) : "-"; }

std::optional<Rect> parse_rect(const std::string& s, const std::string& field) {
  if (s == "-") return std::nullopt;
  const auto parts = split(s, ',');
  if (parts.size() != 4) bad("field " + field + " is not x,y,w,h: '" + s + "'");
  return Rect{static_cast<int>(parse_int(parts[0], field)), static_cast<int>(parse_int(parts[1], field)),
              static_cast<int>(parse_int(parts[2], field)), static_cast<int>(parse_int(parts[3], field))};
}

std::string dash(const std::string& s) { return s.empty() ? "-" : s; }
std::string undash(const std::string& s) { return s == "-" ? "" : s; }

EntryKind parse_kind(const std::string& s) {
  if (s == "original") return EntryKind::original;
  if (s == "noise") return EntryKind::noise;
  if (s == "negative") return EntryKind::negative;
  bad("unknown entry kind '" + s + "'");
}

}  // namespace

std::string to_string(EntryKind k) {
  switch (k) {
    case EntryKind::original: return "original";
    case EntryKind::noise: return "noise";
    case EntryKind::negative: return "negative";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

DatasetCounts count_entries(const std::vector<AugmentationRecord>& entries) {
  DatasetCounts c;
  for (const auto& e : entries) {
    switch (e.kind) {
      case EntryKind::original: ++c.originals; break;
      case EntryKind::noise: ++c.noise_variants; break;
      case EntryKind::negative: ++c.negatives; break;
    }
  }
  c.total = c.originals + c.noise_variants + c.negatives;
  return c;
}

std::string serialize_manifest(const DatasetManifest& m) {
  std::ostringstream os;
  auto kv = [&os](const char* key, const std::string& value) { os << '#' << key << '\t' << value << '\n'; };
  kv("irsynth-manifest", m.version);
  kv("seed", std::to_string(m.seed));
  kv("alpha", format_double(m.alpha));
  kv("s", std::to_string(m.s));
  kv("grid", std::to_string(m.grid));
  kv("var_max", format_double(m.var_max));
  kv("mean_max", format_double(m.mean_max));
  kv("thresholds", m.thresholds_calibrated ? "calibrated" : "configured");
  kv("n_sources", std::to_string(m.n_sources));
  kv("statistic", to_string(m.statistic));
  kv("negatives_from", to_string(m.negatives_from));
  kv("drop_identity", m.drop_identity ? "1" : "0");
  kv("originals", std::to_string(m.counts.originals));
  kv("noise_variants", std::to_string(m.counts.noise_variants));
  kv("negatives", std::to_string(m.counts.negatives));
  kv("total", std::to_string(m.counts.total));
  for (const auto& s : m.skipped) {
    kv("skipped", s.image_id + "\t" + std::to_string(s.target_id) + "\t" + std::to_string(s.overlaps_with));
  }
  os << "#columns";
  for (const char* c : kColumns) os << '\t' << c;
  os << '\n';
  for (const auto& e : m.entries) {
    os << to_string(e.kind) << '\t' << e.output_id << '\t' << e.source_id << '\t' << dash(e.parent_id) << '\t'
       << format_double(e.alpha) << '\t' << (e.target_id ? std::to_string(*e.target_id) : "none") << '\t' << e.beta
       << '\t' << e.image << '\t' << e.mask << '\t' << e.fg_pixels << '\t' << opt_rect(e.anchor) << '\t'
       << dash(e.noise_source) << '\t' << opt_rect(e.noise_rect) << '\n';
  }
  return os.str();
}

DatasetManifest parse_manifest(const std::string& text) {
  DatasetManifest m;
  std::map<std::string, std::string> meta;
  bool seen_columns = false, seen_version = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto fields = split(line.substr(1), '\t');
      if (fields.empty()) bad("empty header line " + std::to_string(lineno));
      if (fields[0] == "columns") {
        if (fields.size() != kColumnCount + 1) bad("unexpected column list");
        for (std::size_t i = 0; i < kColumnCount; ++i) {
          if (fields[i + 1] != kColumns[i]) bad("unexpected column '" + fields[i + 1] + "'");
        }
        seen_columns = true;
      } else if (fields[0] == "skipped") {
        if (fields.size() != 4) bad("malformed skipped line " + std::to_string(lineno));
        m.skipped.push_back(SkipRecord{fields[1], static_cast<int>(parse_int(fields[2], "skipped")),
                                       static_cast<int>(parse_int(fields[3], "skipped"))});
      } else {
        if (fields.size() != 2) bad("malformed header line " + std::to_string(lineno));
        if (fields[0] == "irsynth-manifest") seen_version = true;
        meta[fields[0]] = fields[1];
      }
      continue;
    }
    if (!seen_columns) bad("row before #columns header at line " + std::to_string(lineno));
    const auto f = split(line, '\t');
    if (f.size() != kColumnCount) bad("line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    AugmentationRecord e;
    e.kind = parse_kind(f[0]);
    e.output_id = f[1];
    e.source_id = f[2];
    e.parent_id = undash(f[3]);
    e.alpha = parse_real(f[4], "alpha");
    if (f[5] != "none") e.target_id = static_cast<int>(parse_int(f[5], "target_id"));
    e.beta = static_cast<int>(parse_int(f[6], "beta"));
    e.image = f[7];
    e.mask = f[8];
    e.fg_pixels = parse_int(f[9], "fg_pixels");
    e.anchor = parse_rect(f[10], "anchor");
    e.noise_source = undash(f[11]);
    e.noise_rect = parse_rect(f[12], "noise_rect");
    m.entries.push_back(std::move(e));
  }
  if (!seen_version) bad("missing version header");
  if (!seen_columns) bad("missing #columns header");

  auto get = [&](const char* key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) bad(std::string("missing header field ") + key);
    return it->second;
  };
  m.version = get("irsynth-manifest");
  if (m.version != kManifestVersion) bad("unsupported version " + m.version);
  m.seed = parse_u64(get("seed"), "seed");
  m.alpha = parse_real(get("alpha"), "alpha");
  m.s = static_cast<int>(parse_int(get("s"), "s"));
  m.grid = static_cast<int>(parse_int(get("grid"), "grid"));
  m.var_max = parse_real(get("var_max"), "var_max");
  m.mean_max = parse_real(get("mean_max"), "mean_max");
  m.thresholds_calibrated = get("thresholds") == "calibrated";
  m.n_sources = static_cast<std::size_t>(parse_u64(get("n_sources"), "n_sources"));
  try {
    m.statistic = parse_region_statistic(get("statistic"));
    m.negatives_from = parse_negatives_from(get("negatives_from"));
  } catch (const Error& e) {
    bad(e.what());
  }
  m.drop_identity = get("drop_identity") == "1";
  m.counts.originals = parse_int(get("originals"), "originals");
  m.counts.noise_variants = parse_int(get("noise_variants"), "noise_variants");
  m.counts.negatives = parse_int(get("negatives"), "negatives");
  m.counts.total = parse_int(get("total"), "total");
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write manifest " + path.string());
  out << serialize_manifest(m);
  if (!out) fail(ErrorKind::io, "failed writing manifest " + path.string());
}

}  // namespace irsynth
