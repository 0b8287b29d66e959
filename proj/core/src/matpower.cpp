#include "dc2ac/matpower.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "dc2ac/errors.hpp"

namespace dc2ac {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string strip_comments(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char ch : text) {
    if (ch == '%') in_comment = true;
    if (ch == '\n') in_comment = false;
    out.push_back(in_comment ? ' ' : ch);
  }
  return out;
}

// Returns the text between '[' and ']' after "mpc.<key>", or nullopt.
bool find_block(const std::string& text, const std::string& key, std::string* out) {
  const std::string needle = "mpc." + key;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    std::size_t after = pos + needle.size();
    // Reject longer identifiers such as mpc.buses when looking for mpc.bus.
    if (after < text.size() &&
        (std::isalnum(static_cast<unsigned char>(text[after])) || text[after] == '_')) {
      pos = after;
      continue;
    }
    std::size_t eq = text.find('=', after);
    if (eq == std::string::npos) return false;
    std::size_t open = text.find('[', eq);
    if (open == std::string::npos) return false;
    std::size_t close = text.find(']', open);
    if (close == std::string::npos)
      throw MalformedCase("unterminated matrix for mpc." + key);
    *out = text.substr(open + 1, close - open - 1);
    return true;
  }
  return false;
}

std::vector<std::vector<double>> parse_matrix(const std::string& block,
                                              const std::string& key) {
  std::vector<std::vector<double>> rows;
  std::string row_text;
  auto flush_row = [&]() {
    std::istringstream is(row_text);
    std::vector<double> row;
    std::string tok;
    while (is >> tok) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw MalformedCase("non-numeric token '" + tok + "' in mpc." + key);
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
    row_text.clear();
  };
  for (char ch : block) {
    if (ch == ';' || ch == '\n') {
      flush_row();
    } else {
      row_text.push_back(ch == ',' ? ' ' : ch);
    }
  }
  flush_row();
  return rows;
}

std::vector<std::vector<double>> require_matrix(const std::string& text,
                                                const std::string& key) {
  std::string block;
  if (!find_block(text, key, &block))
    throw MalformedCase("missing mpc." + key + " block");
  auto rows = parse_matrix(block, key);
  if (rows.empty()) throw MalformedCase("mpc." + key + " block is empty");
  return rows;
}

double require_scalar(const std::string& text, const std::string& key) {
  const std::string needle = "mpc." + key;
  std::size_t pos = text.find(needle);
  if (pos == std::string::npos) throw MalformedCase("missing mpc." + key);
  std::size_t eq = text.find('=', pos);
  if (eq == std::string::npos) throw MalformedCase("missing value for mpc." + key);
  char* end = nullptr;
  double v = std::strtod(text.c_str() + eq + 1, &end);
  if (end == text.c_str() + eq + 1)
    throw MalformedCase("non-numeric value for mpc." + key);
  return v;
}

std::string function_name(const std::string& text) {
  std::size_t pos = text.find("function");
  if (pos == std::string::npos) return "";
  std::size_t eq = text.find('=', pos);
  if (eq == std::string::npos) return "";
  std::size_t start = eq + 1;
  while (start < text.size() && std::isspace(static_cast<unsigned char>(text[start])))
    ++start;
  std::size_t end = start;
  while (end < text.size() &&
         (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_'))
    ++end;
  return text.substr(start, end - start);
}

void require_columns(const std::vector<double>& row, std::size_t n,
                     const std::string& key, std::size_t idx) {
  if (row.size() < n)
    throw MalformedCase("mpc." + key + " row " + std::to_string(idx + 1) + " has " +
                        std::to_string(row.size()) + " columns, expected at least " +
                        std::to_string(n));
}

}  // namespace

NetworkCase parse_matpower(const std::string& text, const std::string& name_hint) {
  const std::string clean = strip_comments(text);

  NetworkCase net;
  net.name = function_name(clean);
  if (net.name.empty()) net.name = name_hint.empty() ? "case" : name_hint;
  net.base_mva = require_scalar(clean, "baseMVA");
  if (!(net.base_mva > 0.0)) throw MalformedCase("baseMVA must be positive");
  const double base = net.base_mva;

  auto bus_rows = require_matrix(clean, "bus");
  for (std::size_t i = 0; i < bus_rows.size(); ++i) {
    const auto& row = bus_rows[i];
    require_columns(row, 13, "bus", i);
    Bus b;
    b.id = static_cast<int>(row[0]);
    const int type = static_cast<int>(row[1]);
    switch (type) {
      case 1: b.role = BusRole::PQ; break;
      case 2: b.role = BusRole::PV; break;
      case 3: b.role = BusRole::REF; break;
      default:
        throw MalformedCase("bus " + std::to_string(b.id) + " has unsupported type " +
                            std::to_string(type));
    }
    b.p_d = row[2] / base;
    b.q_d = row[3] / base;
    b.gs = row[4] / base;
    b.bs = row[5] / base;
    b.vm_init = row[7];
    b.va_init = row[8] * kDegToRad;
    b.v_max = row[11];
    b.v_min = row[12];
    net.buses.push_back(b);
  }

  auto gen_rows = require_matrix(clean, "gen");
  for (std::size_t i = 0; i < gen_rows.size(); ++i) {
    const auto& row = gen_rows[i];
    require_columns(row, 10, "gen", i);
    Generator g;
    g.bus = static_cast<int>(row[0]);
    g.p_g = row[1] / base;
    g.q_g = row[2] / base;
    g.q_max = row[3] / base;
    g.q_min = row[4] / base;
    g.v_setpoint = row[5];
    g.in_service = row[7] > 0.0;
    g.p_max = row[8] / base;
    g.p_min = row[9] / base;
    net.generators.push_back(g);
  }

  auto br_rows = require_matrix(clean, "branch");
  for (std::size_t i = 0; i < br_rows.size(); ++i) {
    const auto& row = br_rows[i];
    require_columns(row, 11, "branch", i);
    Branch br;
    br.from_bus = static_cast<int>(row[0]);
    br.to_bus = static_cast<int>(row[1]);
    br.r = row[2];
    br.x = row[3];
    br.b_charge = row[4];
    br.rate_a = row[5] / base;  // 0 stays 0: unlimited
    br.tap = row[8] == 0.0 ? 1.0 : row[8];
    br.shift = row[9] * kDegToRad;
    br.in_service = row[10] > 0.0;
    net.branches.push_back(br);
  }

  auto cost_rows = require_matrix(clean, "gencost");
  if (cost_rows.size() != net.generators.size())
    throw MalformedCase("mpc.gencost has " + std::to_string(cost_rows.size()) +
                        " rows for " + std::to_string(net.generators.size()) +
                        " generators");
  for (std::size_t i = 0; i < cost_rows.size(); ++i) {
    const auto& row = cost_rows[i];
    require_columns(row, 4, "gencost", i);
    const int model = static_cast<int>(row[0]);
    if (model == 1)
      throw UnsupportedCost("generator " + std::to_string(i) +
                            " uses a piecewise-linear cost model");
    if (model != 2)
      throw UnsupportedCost("generator " + std::to_string(i) +
                            " uses unknown cost model " + std::to_string(model));
    const int ncost = static_cast<int>(row[3]);
    if (ncost < 1)
      throw MalformedCase("generator " + std::to_string(i) + " declares " +
                          std::to_string(ncost) + " cost coefficients");
    if (ncost > 3)
      throw UnsupportedCost("generator " + std::to_string(i) + " declares degree-" +
                            std::to_string(ncost - 1) +
                            " polynomial cost; at most quadratic is supported");
    require_columns(row, 4 + static_cast<std::size_t>(ncost), "gencost", i);
    CostCurve& c = net.generators[i].cost;
    // Coefficients arrive highest-degree first.
    if (ncost == 3) {
      c.c2 = row[4];
      c.c1 = row[5];
      c.c0 = row[6];
    } else if (ncost == 2) {
      c.c1 = row[4];
      c.c0 = row[5];
    } else {
      c.c0 = row[4];
    }
  }

  net.finalize();
  return net;
}

NetworkCase load_matpower_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoFailure("cannot read '" + path + "'");
  return parse_matpower(ss.str(), std::filesystem::path(path).stem().string());
}

}  // namespace dc2ac
