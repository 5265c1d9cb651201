#include "jointgrade/checkpoint.h"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "jointgrade/error.h"

namespace jointgrade {

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex(const std::string& token, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || errno == ERANGE) {
    throw ParseError("checkpoint: bad real '" + token + "'", line);
  }
  return v;
}

std::size_t parse_size(const std::string& token, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (token.empty() || pos != token.size()) throw ParseError("checkpoint: bad integer '" + token + "'", line);
  return static_cast<std::size_t>(v);
}

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::string join_dims(const std::vector<std::size_t>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) out += (i ? "," : "") + std::to_string(dims[i]);
  return out.empty() ? "none" : out;
}

ModelConfig parse_model_line(const std::vector<std::string>& tok, std::size_t line) {
  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < tok.size(); ++i) {
    const auto eq = tok[i].find('=');
    if (eq == std::string::npos) throw ParseError("checkpoint: expected key=value, got '" + tok[i] + "'", line);
    kv[tok[i].substr(0, eq)] = tok[i].substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("checkpoint: model line lacks '" + key + "'", line);
    return it->second;
  };
  ModelConfig mc;
  mc.input_dim = parse_size(need("input_dim"), line);
  mc.hidden_dims.clear();
  if (const std::string& h = need("hidden_dims"); h != "none") {
    std::stringstream ss(h);
    for (std::string part; std::getline(ss, part, ',');) mc.hidden_dims.push_back(parse_size(part, line));
  }
  mc.feature_dim = parse_size(need("feature_dim"), line);
  mc.classes_a = parse_size(need("classes_a"), line);
  mc.classes_b = parse_size(need("classes_b"), line);
  try {
    mc.wiring = parse_wiring(need("wiring"));
    mc.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), line);
  }
  return mc;
}

}  // namespace

std::string format_checkpoint(const DualStreamModel& model, const AdamState* optimizer) {
  const ModelConfig& mc = model.config();
  std::ostringstream out;
  out << "jointgrade-checkpoint " << kCheckpointVersion << '\n';
  out << "model input_dim=" << mc.input_dim << " hidden_dims=" << join_dims(mc.hidden_dims)
      << " feature_dim=" << mc.feature_dim << " classes_a=" << mc.classes_a << " classes_b=" << mc.classes_b
      << " wiring=" << wiring_name(mc.wiring) << '\n';
  const auto params = model.parameters();
  for (const auto& p : params) {
    out << "param " << p.name;
    for (std::size_t dim : p.tensor.shape()) out << ' ' << dim;
    out << " :";
    for (double v : p.tensor.values()) out << ' ' << hex(v);
    out << '\n';
  }
  if (optimizer) {
    const AdamHyper& h = optimizer->hyper;
    out << "adam " << optimizer->step_count << ' ' << hex(h.lr) << ' ' << hex(h.beta1) << ' ' << hex(h.beta2)
        << ' ' << hex(h.eps) << '\n';
    for (std::size_t k = 0; k < params.size() && k < optimizer->first_moment.size(); ++k) {
      out << "adam_m " << params[k].name;
      for (double v : optimizer->first_moment[k]) out << ' ' << hex(v);
      out << "\nadam_v " << params[k].name;
      for (double v : optimizer->second_moment[k]) out << ' ' << hex(v);
      out << '\n';
    }
  }
  out << "end\n";
  return out.str();
}

Checkpoint parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;

  auto next = [&]() -> std::vector<std::string> {
    while (std::getline(in, line)) {
      ++line_no;
      auto tok = tokens_of(line);
      if (!tok.empty()) return tok;
    }
    throw ParseError("checkpoint: unexpected end of input", line_no);
  };

  auto tok = next();
  if (tok.size() != 2 || tok[0] != "jointgrade-checkpoint") throw ParseError("checkpoint: missing magic line", line_no);
  if (parse_size(tok[1], line_no) != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + tok[1], line_no);
  }
  tok = next();
  if (tok.empty() || tok[0] != "model") throw ParseError("checkpoint: expected model line", line_no);
  Checkpoint ckpt{DualStreamModel::build(parse_model_line(tok, line_no), 0), std::nullopt};

  auto params = ckpt.model.parameters();
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < params.size(); ++k) index[params[k].name] = k;
  std::vector<bool> seen(params.size(), false);
  AdamState adam;

  auto lookup = [&](const std::string& name) -> std::size_t {
    const auto it = index.find(name);
    if (it == index.end()) throw ParseError("checkpoint: unknown parameter '" + name + "'", line_no);
    return it->second;
  };
  auto read_values = [&](std::size_t first, std::size_t expected) {
    if (tok.size() - first != expected) {
      throw ParseError("checkpoint: expected " + std::to_string(expected) + " values, found " +
                           std::to_string(tok.size() - first), line_no);
    }
    std::vector<double> v;
    v.reserve(expected);
    for (std::size_t i = first; i < tok.size(); ++i) v.push_back(parse_hex(tok[i], line_no));
    return v;
  };

  bool has_adam = false;
  while (true) {
    tok = next();
    if (tok[0] == "end") break;
    if (tok[0] == "param") {
      if (tok.size() < 3) throw ParseError("checkpoint: short param line", line_no);
      const std::size_t k = lookup(tok[1]);
      const Shape& shape = params[k].tensor.shape();
      const std::size_t colon = 2 + shape.size();
      if (tok.size() <= colon || tok[colon] != ":") throw ParseError("checkpoint: malformed param line", line_no);
      for (std::size_t d = 0; d < shape.size(); ++d) {
        if (parse_size(tok[2 + d], line_no) != shape[d]) {
          throw ParseError("checkpoint: shape mismatch for '" + tok[1] + "'", line_no);
        }
      }
      const auto values = read_values(colon + 1, params[k].tensor.size());
      std::copy(values.begin(), values.end(), params[k].tensor.mutable_values().begin());
      seen[k] = true;
    } else if (tok[0] == "adam") {
      if (tok.size() != 6) throw ParseError("checkpoint: malformed adam line", line_no);
      has_adam = true;
      adam.step_count = parse_size(tok[1], line_no);
      adam.hyper = {parse_hex(tok[2], line_no), parse_hex(tok[3], line_no), parse_hex(tok[4], line_no),
                    parse_hex(tok[5], line_no)};
      adam.first_moment.assign(params.size(), {});
      adam.second_moment.assign(params.size(), {});
    } else if (tok[0] == "adam_m" || tok[0] == "adam_v") {
      if (!has_adam || tok.size() < 2) throw ParseError("checkpoint: moment line before adam line", line_no);
      const std::size_t k = lookup(tok[1]);
      auto& target = tok[0] == "adam_m" ? adam.first_moment[k] : adam.second_moment[k];
      target = read_values(2, params[k].tensor.size());
    } else {
      throw ParseError("checkpoint: unknown record '" + tok[0] + "'", line_no);
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!seen[k]) throw ParseError("checkpoint: missing parameter '" + params[k].name + "'", line_no);
    if (has_adam && (adam.first_moment[k].size() != params[k].tensor.size() ||
                     adam.second_moment[k].size() != params[k].tensor.size())) {
      throw ParseError("checkpoint: missing optimizer moments for '" + params[k].name + "'", line_no);
    }
  }
  if (has_adam) ckpt.optimizer = std::move(adam);
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const DualStreamModel& model,
                     const AdamState* optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << format_checkpoint(model, optimizer);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str());
}

}  // namespace jointgrade
