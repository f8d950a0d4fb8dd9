#include "mat/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mat {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::size_t parse_count(const std::string& value, std::size_t line) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError(line, "expected a non-negative integer, got '" + value + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& value, std::size_t line) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError(line, "expected a non-negative integer, got '" + value + "'");
  return out;
}

double parse_real(const std::string& value, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(line, "expected a real number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& value, std::size_t line) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError(line, "expected true or false, got '" + value + "'");
}

}  // namespace

std::string buckets_to_string(const std::vector<Bucket>& buckets) {
  std::string out;
  for (const Bucket& b : buckets) {
    if (!out.empty()) out += ',';
    out += std::to_string(b.max_objects) + "x" + std::to_string(b.max_tokens);
  }
  return out;
}

std::vector<Bucket> buckets_from_string(const std::string& text) {
  std::vector<Bucket> buckets;
  std::istringstream is(text);
  std::string part;
  while (std::getline(is, part, ',')) {
    const auto x = part.find('x');
    if (x == std::string::npos)
      throw std::invalid_argument("bucket entry must look like 6x20: '" + part + "'");
    Bucket b;
    b.max_objects = std::stoul(part.substr(0, x));
    b.max_tokens = std::stoul(part.substr(x + 1));
    buckets.push_back(b);
  }
  validate_buckets(buckets);
  return buckets;
}

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig config;
  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    if (value.empty()) throw ConfigError(line_no, "empty value for key '" + key + "'");

    if (key == "batch_size") config.train.batch_size = parse_count(value, line_no);
    else if (key == "lr_initial") config.train.lr_initial = parse_real(value, line_no);
    else if (key == "plateau_patience") config.train.plateau_patience = parse_count(value, line_no);
    else if (key == "plateau_min_rel_improvement")
      config.train.plateau_min_rel_improvement = parse_real(value, line_no);
    else if (key == "dropout_rate") config.train.dropout_rate = parse_real(value, line_no);
    else if (key == "early_stop_patience")
      config.train.early_stop_patience = parse_count(value, line_no);
    else if (key == "max_epochs") config.train.max_epochs = parse_count(value, line_no);
    else if (key == "seed") config.train.seed = parse_u64(value, line_no);
    else if (key == "grad_clip_norm") config.train.grad_clip_norm = parse_real(value, line_no);
    else if (key == "threads") config.train.threads = parse_count(value, line_no);
    else if (key == "buckets") {
      try {
        config.train.buckets = buckets_from_string(value);
      } catch (const std::exception& e) {
        throw ConfigError(line_no, e.what());
      }
    } else if (key == "modulation") {
      try {
        config.train.modulation = modulation_mode_from_string(value);
      } catch (const std::exception& e) {
        throw ConfigError(line_no, e.what());
      }
    } else if (key == "variant") {
      try {
        config.train.variant = variant_from_string(value);
      } catch (const std::exception& e) {
        throw ConfigError(line_no, e.what());
      }
    } else if (key == "hidden_dim") config.train.hidden_dim = parse_count(value, line_no);
    else if (key == "feature_dim") {
      config.train.feature_dim = parse_count(value, line_no);
      config.synthetic.feature_dim = config.train.feature_dim;
    } else if (key == "num_classes") config.synthetic.num_classes = parse_count(value, line_no);
    else if (key == "noise_std") config.synthetic.noise_std = parse_real(value, line_no);
    else if (key == "prototype_scale")
      config.synthetic.prototype_scale = parse_real(value, line_no);
    else if (key == "max_objects") config.synthetic.max_objects = parse_count(value, line_no);
    else if (key == "synthetic_seed") config.synthetic.seed = parse_u64(value, line_no);
    else if (key == "num_train") config.num_train = parse_count(value, line_no);
    else if (key == "num_val") config.num_val = parse_count(value, line_no);
    else if (key == "min_count") config.min_count = parse_count(value, line_no);
    else if (key == "beam_size") config.beam_size = parse_count(value, line_no);
    else if (key == "max_len") config.max_len = parse_count(value, line_no);
    else if (key == "length_normalize") config.length_normalize = parse_bool(value, line_no);
    else if (key == "cider_d") config.cider_d = parse_bool(value, line_no);
    else if (key == "data_dir") config.data_dir = value;
    else if (key == "val_dir") config.val_dir = value;
    else if (key == "out_dir") config.out_dir = value;
    else throw ConfigError(line_no, "unknown key '" + key + "'");
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "batch_size = " << c.train.batch_size << "\n"
      << "lr_initial = " << c.train.lr_initial << "\n"
      << "plateau_patience = " << c.train.plateau_patience << "\n"
      << "plateau_min_rel_improvement = " << c.train.plateau_min_rel_improvement << "\n"
      << "dropout_rate = " << c.train.dropout_rate << "\n"
      << "early_stop_patience = " << c.train.early_stop_patience << "\n"
      << "max_epochs = " << c.train.max_epochs << "\n"
      << "seed = " << c.train.seed << "\n"
      << "grad_clip_norm = " << c.train.grad_clip_norm << "\n"
      << "threads = " << c.train.threads << "\n"
      << "buckets = " << buckets_to_string(c.train.buckets) << "\n"
      << "modulation = " << to_string(c.train.modulation) << "\n"
      << "variant = " << to_string(c.train.variant) << "\n"
      << "hidden_dim = " << c.train.hidden_dim << "\n"
      << "feature_dim = " << c.train.feature_dim << "\n"
      << "num_classes = " << c.synthetic.num_classes << "\n"
      << "noise_std = " << c.synthetic.noise_std << "\n"
      << "prototype_scale = " << c.synthetic.prototype_scale << "\n"
      << "max_objects = " << c.synthetic.max_objects << "\n"
      << "synthetic_seed = " << c.synthetic.seed << "\n"
      << "num_train = " << c.num_train << "\n"
      << "num_val = " << c.num_val << "\n"
      << "min_count = " << c.min_count << "\n"
      << "beam_size = " << c.beam_size << "\n"
      << "max_len = " << c.max_len << "\n"
      << "length_normalize = " << (c.length_normalize ? "true" : "false") << "\n"
      << "cider_d = " << (c.cider_d ? "true" : "false") << "\n";
  if (!c.data_dir.empty()) out << "data_dir = " << c.data_dir << "\n";
  if (!c.val_dir.empty()) out << "val_dir = " << c.val_dir << "\n";
  if (!c.out_dir.empty()) out << "out_dir = " << c.out_dir << "\n";
  return out.str();
}

}  // namespace mat
