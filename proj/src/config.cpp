// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ctxmt/error.hpp"

namespace ctxmt {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" +
                      v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v +
                      "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + v +
                    "'");
}

std::string format_value(int v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::string& v) { return v; }
std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void assign(int* slot, const std::string& key, const std::string& v) {
  *slot = parse_int(key, v);
}
void assign(double* slot, const std::string& key, const std::string& v) {
  *slot = parse_double(key, v);
}
void assign(bool* slot, const std::string& key, const std::string& v) {
  *slot = parse_bool(key, v);
}
void assign(std::string* slot, const std::string&, const std::string& v) {
  *slot = v;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
#define CTXMT_SET(type, member, keystr, def, help) \
  if (key == keystr) {                             \
    assign(&member, key, value);                   \
    return;                                        \
  }
  CTXMT_CONFIG_KEYS(CTXMT_SET)
#undef CTXMT_SET
  throw ConfigError("unknown config key '" + key + "'");
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
#define CTXMT_DUMP(type, member, keystr, def, help) \
  out << keystr << " = " << format_value(member) << "\n";
  CTXMT_CONFIG_KEYS(CTXMT_DUMP)
#undef CTXMT_DUMP
  return out.str();
}

std::string RunConfig::help() {
  std::ostringstream out;
  RunConfig d;
#define CTXMT_HELP(type, member, keystr, def, help) \
  out << "  " << keystr << " (default " << format_value(d.member) << ")\n"    \
      << "      " << help << "\n";
  CTXMT_CONFIG_KEYS(CTXMT_HELP)
#undef CTXMT_HELP
  return out.str();
}

RunConfig RunConfig::from_text(const std::string& text,
                               const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + t + "'");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), path);
}

TransformerConfig RunConfig::transformer(int src_vocab, int tgt_vocab) const {
  TransformerConfig t;
  t.d_model = model_d_model;
  t.d_ff = model_d_ff;
  t.num_layers = model_num_layers;
  t.num_heads = model_num_heads;
  t.src_vocab = src_vocab;
  t.tgt_vocab = tgt_vocab;
  t.max_len = model_max_len;
  t.dropout = model_dropout;
  t.label_smoothing = model_label_smoothing;
  t.pre_norm = model_pre_norm;
  t.tie_output = model_tie_output;
  t.validate();
  return t;
}

}  // namespace ctxmt
