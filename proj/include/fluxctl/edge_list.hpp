#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluxctl {

struct EdgeList {
  Eigen::MatrixXd adjacency;       // n x n, n = largest node id
  std::vector<std::string> labels;  // 1-based ids as text
  int edges = 0;                    // distinct edges after merging
  std::vector<std::string> warnings;
};

/// Whitespace separated `i j [w]` lines with 1-based ids and default weight
/// 1; `#` starts a comment. With `undirected` each edge is mirrored.
/// Duplicate edges are summed and reported in `warnings`. Throws kParse with
/// the offending line number on malformed input and when no edge is found.
EdgeList parse_edge_list(const std::string& path, bool undirected = true);

/// Same grammar, reading from an in-memory buffer.
EdgeList parse_edge_text(const std::string& text, bool undirected = true);

}  // namespace fluxctl
