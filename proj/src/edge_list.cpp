#include "fluxctl/edge_list.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "fluxctl/error.hpp"

namespace fluxctl {

namespace {

[[noreturn]] void parse_failure(int line, const std::string& what) {
  throw Error(ErrorCode::kParse,
              "edge list line " + std::to_string(line) + ": " + what);
}

long parse_id(const std::string& token, int line) {
  std::size_t used = 0;
  long id = 0;
  try {
    id = std::stol(token, &used);
  } catch (const std::exception&) {
    parse_failure(line, "node id '" + token + "' is not an integer");
  }
  if (used != token.size()) {
    parse_failure(line, "node id '" + token + "' is not an integer");
  }
  if (id < 1) parse_failure(line, "node ids are 1-based");
  return id;
}

}  // namespace

EdgeList parse_edge_text(const std::string& text, bool undirected) {
  std::map<std::pair<long, long>, double> weights;
  std::vector<std::string> warnings;
  long max_id = 0;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) {
      raw.erase(hash);
    }
    std::istringstream fields(raw);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() < 2 || tokens.size() > 3) {
      parse_failure(line, "expected 'i j [w]'");
    }
    long i = parse_id(tokens[0], line);
    long j = parse_id(tokens[1], line);
    double w = 1.0;
    if (tokens.size() == 3) {
      std::size_t used = 0;
      try {
        w = std::stod(tokens[2], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tokens[2].size() || !std::isfinite(w)) {
        parse_failure(line, "weight '" + tokens[2] + "' is not a number");
      }
    }
    if (undirected && j < i) std::swap(i, j);
    max_id = std::max({max_id, i, j});
    auto [it, inserted] = weights.try_emplace({i, j}, 0.0);
    if (!inserted) {
      warnings.push_back("line " + std::to_string(line) + ": duplicate edge " +
                         std::to_string(i) + " " + std::to_string(j) +
                         ", weights summed");
    }
    it->second += w;
  }
  if (weights.empty()) throw Error(ErrorCode::kParse, "no edges");

  EdgeList out;
  const auto n = static_cast<Eigen::Index>(max_id);
  out.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [edge, w] : weights) {
    out.adjacency(edge.first - 1, edge.second - 1) += w;
    if (undirected && edge.first != edge.second) {
      out.adjacency(edge.second - 1, edge.first - 1) += w;
    }
  }
  out.edges = static_cast<int>(weights.size());
  for (long id = 1; id <= max_id; ++id) out.labels.push_back(std::to_string(id));
  out.warnings = std::move(warnings);
  return out;
}

EdgeList parse_edge_list(const std::string& path, bool undirected) {
  std::ifstream file(path);
  if (!file) {
    throw Error(ErrorCode::kInvalidInput, "cannot open edge list " + path);
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_edge_text(buffer.str(), undirected);
}

}  // namespace fluxctl
