#include "advdiff/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "advdiff/rng.hpp"

namespace advdiff {

std::vector<std::vector<int>> Graph::neighbor_lists() const {
    std::vector<std::vector<int>> adj(num_agents);
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    for (auto& list : adj) std::sort(list.begin(), list.end());
    return adj;
}

void validate_graph(const Graph& g) {
    if (g.num_agents < 1) throw std::invalid_argument("graph: num_agents must be >= 1");
    if (static_cast<int>(g.self_loop.size()) != g.num_agents)
        throw std::invalid_argument("graph: self_loop size mismatch");
    std::set<std::pair<int, int>> seen;
    for (const auto& [u, v] : g.edges) {
        if (u < 0 || v < 0 || u >= g.num_agents || v >= g.num_agents)
            throw std::invalid_argument("graph: node index out of range");
        if (u == v) throw std::invalid_argument("graph: self-loops belong in self_loop, not edges");
        auto key = std::minmax(u, v);
        if (!seen.insert(key).second) throw std::invalid_argument("graph: duplicate edge");
    }
}

namespace {

bool connected_undirected(const Graph& g) {
    if (g.num_agents == 1) return true;
    auto adj = g.neighbor_lists();
    std::vector<char> seen(g.num_agents, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                q.push(v);
            }
        }
    }
    return count == g.num_agents;
}

}  // namespace

Graph generate_random_graph(int num_agents, double edge_probability, uint64_t seed) {
    if (num_agents < 1) throw std::invalid_argument("generate_random_graph: K must be >= 1");
    if (edge_probability <= 0.0 || edge_probability > 1.0)
        throw std::invalid_argument("generate_random_graph: p must be in (0, 1]");

    for (int attempt = 0; attempt < 1000; ++attempt) {
        Rng rng(derive_seed(seed + attempt, kTagGraph, 0));
        Graph g;
        g.num_agents = num_agents;
        g.self_loop.assign(num_agents, 1);
        for (int u = 0; u < num_agents; ++u)
            for (int v = u + 1; v < num_agents; ++v)
                if (rng.uniform() < edge_probability) g.edges.emplace_back(u, v);
        if (connected_undirected(g)) {
            validate_graph(g);
            return g;
        }
    }
    throw std::runtime_error(
        "generate_random_graph: no connected graph after 1000 retries "
        "(edge_probability too small for this K)");
}

bool check_strong_connectivity(const Graph& g) {
    if (g.num_agents == 0) return false;
    auto adj = g.neighbor_lists();
    for (int s = 0; s < g.num_agents; ++s) {
        std::vector<char> seen(g.num_agents, 0);
        std::queue<int> q;
        q.push(s);
        seen[s] = 1;
        int count = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++count;
                    q.push(v);
                }
            }
        }
        if (count != g.num_agents) return false;
    }
    return true;
}

CombinationMatrix build_combination_matrix(const Graph& g, CombinationRule rule) {
    validate_graph(g);
    if (!check_strong_connectivity(g))
        throw std::invalid_argument("build_combination_matrix: graph is not connected");
    for (char s : g.self_loop)
        if (!s) throw std::invalid_argument("build_combination_matrix: every node needs a self-loop");

    const int k = g.num_agents;
    auto adj = g.neighbor_lists();
    Matrix a(k, k, 0.0);

    if (rule == CombinationRule::metropolis) {
        // a(l,k) = 1 / (1 + max(deg_l, deg_k)) off-diagonal, remainder on the
        // diagonal; symmetric and doubly stochastic.
        for (int col = 0; col < k; ++col) {
            double diag = 1.0;
            for (int l : adj[col]) {
                const double w = 1.0 / (1.0 + std::max(adj[l].size(), adj[col].size()));
                a(l, col) = w;
                diag -= w;
            }
            a(col, col) = diag;
        }
    } else {
        for (int col = 0; col < k; ++col) {
            const double w = 1.0 / (adj[col].size() + 1);
            a(col, col) = w;
            for (int l : adj[col]) a(l, col) = w;
        }
    }

    CombinationMatrix cm;
    cm.entries = a;
    cm.perron = perron_vector(a);
    cm.column_support.resize(k);
    for (int col = 0; col < k; ++col)
        for (int l = 0; l < k; ++l)
            if (a(l, col) > 0.0) cm.column_support[col].push_back(l);
    return cm;
}

namespace {

// Strong connectivity of the support digraph of a square matrix: forward and
// backward reachability from node 0 must both cover all nodes.
bool support_strongly_connected(const Matrix& a) {
    const int k = a.rows();
    auto reach = [&](bool transpose) {
        std::vector<char> seen(k, 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        int count = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v = 0; v < k; ++v) {
                const double w = transpose ? a(u, v) : a(v, u);
                if (w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    ++count;
                    q.push(v);
                }
            }
        }
        return count == k;
    };
    return reach(false) && reach(true);
}

}  // namespace

Vector perron_vector(const Matrix& a) {
    const int k = a.rows();
    if (k != a.cols()) throw std::invalid_argument("perron_vector: matrix not square");
    for (int col = 0; col < k; ++col) {
        double sum = 0.0;
        for (int row = 0; row < k; ++row) {
            if (a(row, col) < 0.0) throw std::invalid_argument("perron_vector: negative entry");
            sum += a(row, col);
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("perron_vector: matrix is not left-stochastic");
    }
    if (!support_strongly_connected(a))
        throw std::invalid_argument("perron_vector: support graph is not strongly connected");

    Vector v(k, 1.0 / k);
    Vector next(k, 0.0);
    for (long it = 0; it < 1000000; ++it) {
        for (int i = 0; i < k; ++i) next[i] = dot(a.row(i), v);
        double sum = 0.0;
        for (double x : next) sum += x;
        for (double& x : next) x /= sum;

        double residual = 0.0;
        for (int i = 0; i < k; ++i) residual = std::max(residual, std::abs(next[i] - v[i]));
        v = next;
        if (residual < 1e-12) {
            for (double x : v)
                if (x <= 0.0) throw std::runtime_error("perron_vector: non-positive entry");
            return v;
        }
    }
    throw std::runtime_error("perron_vector: power iteration did not converge within 1e6 iterations");
}

double estimate_mixing_modulus(const Matrix& a, const Vector& perron, int iters) {
    const int k = a.rows();
    // Deflate the Perron pair: B = A - perron * 1^T, then track the average
    // growth rate of ||B^n v||. Handles complex-pair dominance as well.
    Rng rng(12345);
    Vector v(k);
    for (double& x : v) x = rng.normal();

    double log_growth = 0.0;
    int counted = 0;
    for (int it = 0; it < iters; ++it) {
        double vsum = 0.0;
        for (double x : v) vsum += x;
        Vector next(k, 0.0);
        for (int i = 0; i < k; ++i) next[i] = dot(a.row(i), v) - perron[i] * vsum;
        const double n = norm2(next);
        if (n < 1e-300) return 0.0;
        if (it >= iters / 2) {
            log_growth += std::log(n);
            ++counted;
        }
        for (double& x : next) x /= n;
        v = next;
    }
    return std::exp(log_growth / counted);
}

Graph read_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_graph_file: cannot open " + path);
    int k;
    if (!(in >> k)) throw std::runtime_error("read_graph_file: missing node count in " + path);
    Graph g;
    g.num_agents = k;
    g.self_loop.assign(k, 0);
    int u, v;
    while (in >> u >> v) {
        if (u < 1 || v < 1 || u > k || v > k)
            throw std::runtime_error("read_graph_file: node index out of range in " + path);
        if (u == v) {
            g.self_loop[u - 1] = 1;
        } else {
            g.edges.emplace_back(std::min(u, v) - 1, std::max(u, v) - 1);
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    validate_graph(g);
    return g;
}

void write_graph_file(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_graph_file: cannot open " + path);
    out << g.num_agents << "\n";
    for (int i = 0; i < g.num_agents; ++i)
        if (g.self_loop[i]) out << i + 1 << " " << i + 1 << "\n";
    for (const auto& [u, v] : g.edges) out << u + 1 << " " << v + 1 << "\n";
}

CombinationRule parse_combination_rule(const std::string& name) {
    if (name == "metropolis") return CombinationRule::metropolis;
    if (name == "uniform" || name == "uniform_averaging") return CombinationRule::uniform_averaging;
    throw std::invalid_argument("unknown combination rule: " + name);
}

}  // namespace advdiff
