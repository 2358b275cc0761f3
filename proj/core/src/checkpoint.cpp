#include "dcam/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dcam/error.hpp"

namespace dcam {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'A', 'M'};
constexpr std::uint8_t kVersion = 0x01;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
}

void append_string(std::vector<std::uint8_t>& out, const std::string& s) {
  append_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void append_entry(std::vector<std::uint8_t>& out, const std::string& name, const Dims& dims,
                  std::span<const double> values) {
  append_string(out, name);
  append_u8(out, static_cast<std::uint8_t>(dims.size()));
  for (std::int64_t d : dims) append_u32(out, static_cast<std::uint32_t>(d));
  for (double v : values) append_f64(out, v);
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  std::uint8_t read_u8() { return need(1)[0]; }

  std::uint32_t read_u32() {
    const std::uint8_t* p = need(4);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }

  double read_f64() {
    const std::uint8_t* p = need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
  }

  std::string read_string() {
    const std::uint32_t len = read_u32();
    const std::uint8_t* p = need(len);
    return std::string(reinterpret_cast<const char*>(p), len);
  }

  bool exhausted() const { return pos_ == bytes_.size(); }
  const std::string& source() const { return source_; }

 private:
  const std::uint8_t* need(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw ParseError(source_ + ": truncated checkpoint file (needed " + std::to_string(n) +
                       " bytes at offset " + std::to_string(pos_) + ")");
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::span<const std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ",";
    out << v[i];
  }
  return out.str();
}

std::string join_strings(const std::vector<std::string>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ",";
    out << v[i];
  }
  return out.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string config_block(const DenseConfig& cfg) {
  for (const std::string& name : cfg.class_names) {
    if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos) {
      throw ConfigError("class name '" + name + "' cannot be serialized");
    }
  }
  std::ostringstream out;
  out << "input_channels=" << cfg.input_channels << "\n";
  out << "initial_channels=" << cfg.initial_channels << "\n";
  out << "block_sizes=" << join_ints(cfg.block_sizes) << "\n";
  out << "growth_rate=" << cfg.growth_rate << "\n";
  out << "compression=" << format_double(cfg.compression) << "\n";
  out << "num_classes=" << cfg.num_classes << "\n";
  out << "image_size=" << cfg.image_size << "\n";
  out << "class_names=" << join_strings(cfg.class_names) << "\n";
  out << "bn_epsilon=" << format_double(cfg.bn_epsilon) << "\n";
  out << "bn_momentum=" << format_double(cfg.bn_momentum) << "\n";
  return out.str();
}

int parse_int(const std::string& s, const std::string& key, const std::string& source) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source + ": bad integer for config key '" + key + "': '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& key, const std::string& source) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError(source + ": bad number for config key '" + key + "': '" + s + "'");
  }
  return v;
}

DenseConfig parse_config_block(const std::string& block, const std::string& source) {
  DenseConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(block);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + ": malformed config line '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (!seen.insert(key).second) {
      throw ParseError(source + ": duplicate config key '" + key + "'");
    }
    if (key == "input_channels") {
      cfg.input_channels = parse_int(value, key, source);
    } else if (key == "initial_channels") {
      cfg.initial_channels = parse_int(value, key, source);
    } else if (key == "block_sizes") {
      cfg.block_sizes.clear();
      for (const std::string& part : split(value, ',')) {
        cfg.block_sizes.push_back(parse_int(part, key, source));
      }
    } else if (key == "growth_rate") {
      cfg.growth_rate = parse_int(value, key, source);
    } else if (key == "compression") {
      cfg.compression = parse_double(value, key, source);
    } else if (key == "num_classes") {
      cfg.num_classes = parse_int(value, key, source);
    } else if (key == "image_size") {
      cfg.image_size = parse_int(value, key, source);
    } else if (key == "class_names") {
      cfg.class_names = split(value, ',');
    } else if (key == "bn_epsilon") {
      cfg.bn_epsilon = parse_double(value, key, source);
    } else if (key == "bn_momentum") {
      cfg.bn_momentum = parse_double(value, key, source);
    } else {
      throw ParseError(source + ": unknown config key '" + key + "'");
    }
  }
  return cfg;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const DenseModel& model) {
  DenseModel& m = const_cast<DenseModel&>(model);  // enumeration only shares handles
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  append_u8(out, kVersion);
  append_string(out, config_block(m.config));

  auto params = m.named_parameters();
  auto stats = m.named_running_stats();
  const std::uint32_t entries =
      static_cast<std::uint32_t>(params.size() + 3 * stats.size() + 2);
  append_u32(out, entries);

  for (auto& [name, tensor] : params) {
    append_entry(out, name, tensor.dims(), tensor.values());
  }
  for (auto& [prefix, rs] : stats) {
    const Dims dims{static_cast<std::int64_t>(rs->mean.size())};
    append_entry(out, "stats." + prefix + ".mean", dims, rs->mean);
    append_entry(out, "stats." + prefix + ".var", dims, rs->var);
    const double batches = static_cast<double>(rs->batches);
    append_entry(out, "stats." + prefix + ".batches", Dims{1}, std::span<const double>(&batches, 1));
  }
  append_entry(out, "stats.input.mean", Dims{static_cast<std::int64_t>(m.input_mean.size())},
               m.input_mean);
  append_entry(out, "stats.input.std", Dims{static_cast<std::int64_t>(m.input_std.size())},
               m.input_std);
  return out;
}

DenseModel deserialize_checkpoint(std::span<const std::uint8_t> bytes,
                                  const std::string& source_name) {
  Reader reader(bytes, source_name);
  char magic[4];
  for (int i = 0; i < 4; ++i) magic[i] = static_cast<char>(reader.read_u8());
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError(source_name + ": checkpoint magic-number mismatch (not a DCAM file)");
  }
  const std::uint8_t version = reader.read_u8();
  if (version != kVersion) {
    throw ParseError(source_name + ": unsupported checkpoint version " + std::to_string(version));
  }
  const DenseConfig cfg = parse_config_block(reader.read_string(), source_name);
  cfg.validate();
  DenseModel model = build_model(cfg, 0);

  std::map<std::string, Tensor> param_by_name;
  for (auto& [name, tensor] : model.named_parameters()) param_by_name.emplace(name, tensor);
  std::map<std::string, RunningStats*> stats_by_prefix;
  for (auto& [prefix, rs] : model.named_running_stats()) stats_by_prefix.emplace(prefix, rs);

  const std::uint32_t entries = reader.read_u32();
  std::set<std::string> seen;
  for (std::uint32_t e = 0; e < entries; ++e) {
    const std::string name = reader.read_string();
    if (!seen.insert(name).second) {
      throw ParseError(source_name + ": duplicate parameter name '" + name + "'");
    }
    const std::uint8_t rank = reader.read_u8();
    Dims dims;
    std::int64_t count = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      const std::uint32_t d = reader.read_u32();
      dims.push_back(static_cast<std::int64_t>(d));
      count *= d;
    }
    std::vector<double> values(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) values[static_cast<std::size_t>(i)] = reader.read_f64();

    if (name.starts_with("stats.")) {
      const std::string rest = name.substr(6);
      if (rest == "input.mean") {
        model.input_mean = std::move(values);
        continue;
      }
      if (rest == "input.std") {
        model.input_std = std::move(values);
        continue;
      }
      const std::size_t dot = rest.rfind('.');
      const std::string prefix = dot == std::string::npos ? rest : rest.substr(0, dot);
      const std::string field = dot == std::string::npos ? "" : rest.substr(dot + 1);
      auto it = stats_by_prefix.find(prefix);
      if (it == stats_by_prefix.end()) {
        throw ParseError(source_name + ": unknown stats entry '" + name + "'");
      }
      RunningStats* rs = it->second;
      if (field == "mean" || field == "var") {
        auto& dst = field == "mean" ? rs->mean : rs->var;
        if (values.size() != dst.size()) {
          throw ParseError(source_name + ": stats entry '" + name + "' has " +
                           std::to_string(values.size()) + " values, expected " +
                           std::to_string(dst.size()));
        }
        dst = std::move(values);
      } else if (field == "batches") {
        if (values.size() != 1) {
          throw ParseError(source_name + ": stats entry '" + name + "' must hold one value");
        }
        rs->batches = static_cast<std::int64_t>(values[0]);
      } else {
        throw ParseError(source_name + ": unknown stats entry '" + name + "'");
      }
    } else {
      auto it = param_by_name.find(name);
      if (it == param_by_name.end()) {
        throw ParseError(source_name + ": unknown parameter '" + name + "'");
      }
      Tensor tensor = it->second;
      if (tensor.dims() != dims) {
        throw ParseError(source_name + ": parameter '" + name + "' has shape " +
                         dims_to_string(dims) + ", expected " + dims_to_string(tensor.dims()));
      }
      std::copy(values.begin(), values.end(), tensor.values().begin());
      param_by_name.erase(it);
    }
  }
  if (!param_by_name.empty()) {
    throw ParseError(source_name + ": missing parameter '" + param_by_name.begin()->first + "'");
  }
  if (!reader.exhausted()) {
    throw ParseError(source_name + ": trailing bytes after last checkpoint entry");
  }
  return model;
}

void save_checkpoint(const DenseModel& model, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

DenseModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path.filename().string());
}

}  // namespace dcam
