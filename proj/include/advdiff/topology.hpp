#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "advdiff/linalg.hpp"

namespace advdiff {

// Undirected communication graph. Edges are stored canonically (u < v,
// 0-based, no duplicates); self-loops are tracked per node.
struct Graph {
    int num_agents = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<char> self_loop;

    // adjacency lists excluding self-loops, sorted ascending
    std::vector<std::vector<int>> neighbor_lists() const;
};

// Throws std::invalid_argument on out-of-range nodes or duplicate edges.
void validate_graph(const Graph& g);

// Erdos-Renyi draw with self-loops on every node; retries with an
// incremented seed until connected. Throws after 1000 failed retries.
Graph generate_random_graph(int num_agents, double edge_probability, uint64_t seed);

// True iff every ordered node pair is linked by a path (BFS from every node).
bool check_strong_connectivity(const Graph& g);

enum class CombinationRule { metropolis, uniform_averaging };

// Left-stochastic combination weights plus the Perron vector and, per
// column, the list of in-neighborhood indices (sorted) with positive weight.
struct CombinationMatrix {
    Matrix entries;   // entries(l, k) = weight agent k puts on neighbor l
    Vector perron;    // positive, sums to 1, entries = perron
    std::vector<std::vector<int>> column_support;

    int num_agents() const { return entries.rows(); }
};

// Rejects disconnected graphs. metropolis yields a symmetric doubly
// stochastic matrix; uniform_averaging splits each column equally over the
// closed neighborhood.
CombinationMatrix build_combination_matrix(const Graph& g, CombinationRule rule);

// Power iteration for the right eigenvector of eigenvalue 1 of a
// left-stochastic matrix, normalized to sum 1. Throws if the support graph
// is not strongly connected or the iteration fails to reach 1e-12 residual
// within 1e6 iterations.
Vector perron_vector(const Matrix& a);

// Numerical estimate of the second-largest eigenvalue modulus via power
// iteration on the Perron-deflated matrix.
double estimate_mixing_modulus(const Matrix& a, const Vector& perron, int iters = 300);

// Edge-list text format: first line K, then one "u v" line per edge
// (1-based); "u u" denotes a self-loop.
Graph read_graph_file(const std::string& path);
void write_graph_file(const Graph& g, const std::string& path);

CombinationRule parse_combination_rule(const std::string& name);

}  // namespace advdiff
