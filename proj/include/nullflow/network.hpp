/*==============================================================================
 *  network.hpp
 *
 *  Pipe network data model: junctions (unknown head, fixed demand), fixed-head
 *  nodes (reservoirs, tanks treated as known heads), and pipes. A Network is
 *  validated on construction and immutable afterwards. All quantities are SI:
 *  flows m³/s, heads and lengths m, diameters m.
 *
 *============================================================================*/
#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "sparse.hpp"

namespace nullflow {

enum class HeadlossModel { HazenWilliams, DarcyWeisbach };

inline std::string_view to_string(HeadlossModel m) noexcept
{
    return m == HeadlossModel::HazenWilliams ? "H-W" : "D-W";
}

struct NodeRef {
    enum class Kind : std::uint8_t { Junction, FixedHead };
    Kind kind = Kind::Junction;
    Index index = 0;

    static NodeRef junction(Index i) { return {Kind::Junction, i}; }
    static NodeRef fixed(Index i) { return {Kind::FixedHead, i}; }
    bool is_junction() const noexcept { return kind == Kind::Junction; }

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct Junction {
    std::string id;
    double demand = 0.0;  // m³/s

    friend bool operator==(const Junction&, const Junction&) = default;
};

struct FixedHead {
    std::string id;
    double head = 0.0;  // m

    friend bool operator==(const FixedHead&, const FixedHead&) = default;
};

struct Pipe {
    std::string id;
    NodeRef from;
    NodeRef to;
    double length = 0.0;     // m
    double diameter = 0.0;   // m
    double roughness = 0.0;  // HW coefficient C, or DW absolute roughness in m
    HeadlossModel model = HeadlossModel::HazenWilliams;

    friend bool operator==(const Pipe&, const Pipe&) = default;
};

class Network {
public:
    Network() = default;

    Network(std::vector<Junction> junctions, std::vector<FixedHead> fixed_heads,
            std::vector<Pipe> pipes)
        : junctions_(std::move(junctions)), fixed_(std::move(fixed_heads)), pipes_(std::move(pipes))
    {
        validate();
        build_incidence_matrices();
    }

    std::span<const Junction> junctions() const noexcept { return junctions_; }
    std::span<const FixedHead> fixed_heads() const noexcept { return fixed_; }
    std::span<const Pipe> pipes() const noexcept { return pipes_; }

    Index n_pipes() const noexcept { return static_cast<Index>(pipes_.size()); }
    Index n_junctions() const noexcept { return static_cast<Index>(junctions_.size()); }
    Index n_fixed() const noexcept { return static_cast<Index>(fixed_.size()); }
    Index n_loops() const noexcept { return n_pipes() - n_junctions(); }

    /// n_p × n_n: +1 where a pipe enters a junction, −1 where it leaves.
    const CscMatrix& A12() const noexcept { return A12_; }
    /// n_p × n_0, same sign convention for fixed-head nodes.
    const CscMatrix& A10() const noexcept { return A10_; }

    std::vector<double> demands() const
    {
        std::vector<double> d(junctions_.size());
        for (std::size_t i = 0; i < junctions_.size(); ++i) d[i] = junctions_[i].demand;
        return d;
    }

    std::vector<double> fixed_head_values() const
    {
        std::vector<double> h(fixed_.size());
        for (std::size_t i = 0; i < fixed_.size(); ++i) h[i] = fixed_[i].head;
        return h;
    }

    /// FNV-1a over the canonical content; identifies the network a set of
    /// precomputed quantities belongs to.
    std::uint64_t fingerprint() const noexcept
    {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&h](const void* data, std::size_t n) {
            auto* b = static_cast<const unsigned char*>(data);
            for (std::size_t k = 0; k < n; ++k) {
                h ^= b[k];
                h *= 1099511628211ULL;
            }
        };
        auto mix_str = [&](const std::string& s) { mix(s.data(), s.size()); mix("\0", 1); };
        for (const auto& j : junctions_) { mix_str(j.id); mix(&j.demand, sizeof(double)); }
        for (const auto& f : fixed_) { mix_str(f.id); mix(&f.head, sizeof(double)); }
        for (const auto& p : pipes_) {
            mix_str(p.id);
            mix(&p.from.kind, 1); mix(&p.from.index, sizeof(Index));
            mix(&p.to.kind, 1); mix(&p.to.index, sizeof(Index));
            mix(&p.length, sizeof(double));
            mix(&p.diameter, sizeof(double));
            mix(&p.roughness, sizeof(double));
            mix(&p.model, sizeof(p.model));
        }
        return h;
    }

    /// Same topology and parameters with a different demand vector.
    Network with_demands(std::span<const double> d) const
    {
        if (static_cast<Index>(d.size()) != n_junctions()) {
            throw Error(Errc::DimensionMismatch, "demand vector length");
        }
        Network copy = *this;
        for (std::size_t i = 0; i < d.size(); ++i) copy.junctions_[i].demand = d[i];
        return copy;
    }

    std::string node_id(NodeRef r) const
    {
        return r.is_junction() ? junctions_[r.index].id : fixed_[r.index].id;
    }

    friend bool operator==(const Network& a, const Network& b)
    {
        return a.junctions_ == b.junctions_ && a.fixed_ == b.fixed_ && a.pipes_ == b.pipes_;
    }

private:
    void validate() const
    {
        if (junctions_.empty()) {
            throw Error(Errc::InvalidValue, "network has no junctions");
        }
        if (fixed_.empty()) {
            throw Error(Errc::NoFixedHead, "network has no fixed-head node");
        }
        std::unordered_map<std::string, int> node_ids;
        for (const auto& j : junctions_) {
            if (!node_ids.emplace(j.id, 0).second) {
                throw Error(Errc::DuplicateId, "node id '" + j.id + "'");
            }
        }
        for (const auto& f : fixed_) {
            if (!node_ids.emplace(f.id, 1).second) {
                throw Error(Errc::DuplicateId, "node id '" + f.id + "'");
            }
        }
        std::unordered_map<std::string, int> pipe_ids;
        const Index nn = n_junctions(), n0 = n_fixed();
        auto in_range = [&](NodeRef r) {
            return r.index >= 0 && r.index < (r.is_junction() ? nn : n0);
        };
        for (const auto& p : pipes_) {
            if (!pipe_ids.emplace(p.id, 0).second) {
                throw Error(Errc::DuplicateId, "pipe id '" + p.id + "'");
            }
            if (!in_range(p.from) || !in_range(p.to)) {
                throw Error(Errc::DanglingNodeRef, "pipe '" + p.id + "' references a missing node");
            }
            if (p.from == p.to) {
                throw Error(Errc::InvalidValue, "pipe '" + p.id + "' starts and ends at the same node");
            }
            if (!(p.length > 0.0) || !(p.diameter > 0.0) || !(p.roughness > 0.0)) {
                throw Error(Errc::InvalidValue,
                            "pipe '" + p.id + "' needs positive length, diameter and roughness");
            }
        }

        // Connectivity over all nodes; junctions first, then fixed heads.
        const Index nv = nn + n0;
        std::vector<Index> root(static_cast<std::size_t>(nv));
        std::iota(root.begin(), root.end(), Index{0});
        auto find = [&root](Index x) {
            while (root[x] != x) x = root[x] = root[root[x]];
            return x;
        };
        auto flat = [nn](NodeRef r) { return r.is_junction() ? r.index : nn + r.index; };
        bool fixed_touches_junction = false;
        for (const auto& p : pipes_) {
            root[find(flat(p.from))] = find(flat(p.to));
            if (p.from.is_junction() != p.to.is_junction()) fixed_touches_junction = true;
        }
        if (!fixed_touches_junction) {
            throw Error(Errc::NoFixedHead, "no fixed-head node is adjacent to a junction");
        }
        const Index r0 = find(0);
        for (Index v = 1; v < nv; ++v) {
            if (find(v) != r0) {
                NodeRef r = v < nn ? NodeRef::junction(v) : NodeRef::fixed(v - nn);
                throw Error(Errc::DisconnectedGraph, "node '" + node_id(r) + "' is not connected");
            }
        }
    }

    void build_incidence_matrices()
    {
        std::vector<Triplet> t12, t10;
        for (Index j = 0; j < n_pipes(); ++j) {
            const auto& p = pipes_[j];
            (p.from.is_junction() ? t12 : t10).push_back({j, p.from.index, -1.0});
            (p.to.is_junction() ? t12 : t10).push_back({j, p.to.index, +1.0});
        }
        A12_ = CscMatrix::from_triplets(n_pipes(), n_junctions(), t12);
        A10_ = CscMatrix::from_triplets(n_pipes(), n_fixed(), t10);
    }

    std::vector<Junction> junctions_;
    std::vector<FixedHead> fixed_;
    std::vector<Pipe> pipes_;
    CscMatrix A12_;
    CscMatrix A10_;
};

/// The pair (A12, A10); column order follows node order, row order pipe order.
inline std::pair<CscMatrix, CscMatrix> build_incidence(const Network& net)
{
    return {net.A12(), net.A10()};
}

/// Canonical JSON dump used for test fixtures.
inline nlohmann::json to_json(const Network& net)
{
    using nlohmann::json;
    json j;
    j["junctions"] = json::array();
    for (const auto& x : net.junctions()) {
        j["junctions"].push_back({{"id", x.id}, {"demand", x.demand}});
    }
    j["fixed_heads"] = json::array();
    for (const auto& x : net.fixed_heads()) {
        j["fixed_heads"].push_back({{"id", x.id}, {"head", x.head}});
    }
    j["pipes"] = json::array();
    for (const auto& p : net.pipes()) {
        j["pipes"].push_back({{"id", p.id},
                              {"from_node", net.node_id(p.from)},
                              {"to_node", net.node_id(p.to)},
                              {"length", p.length},
                              {"diameter", p.diameter},
                              {"roughness", p.roughness},
                              {"model", p.model == HeadlossModel::HazenWilliams ? "HazenWilliams"
                                                                                : "DarcyWeisbach"}});
    }
    return j;
}

}  // namespace nullflow
