#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scramble/config.hpp"
#include "scramble/rng.hpp"

namespace scramble {

// Peer sampling service stand-in: a perfect global sampler over the node
// population. "Responsive" means below the inbound-connection cap when one
// is configured; churn is out of scope so nodes are always alive.
class SamplerView {
public:
    explicit SamplerView(std::uint32_t population, std::optional<std::uint32_t> max_inbound = {});

    std::uint32_t population() const { return population_; }

    void note_link_added(NodeId target);
    void note_link_removed(NodeId target);
    std::uint32_t inbound(NodeId target) const;
    bool responsive(NodeId target) const;

    // Up to `count` distinct nodes, uniform without replacement from
    // population \ ({requester} ∪ exclude ∪ {at-capacity nodes}). A short
    // result signals candidate exhaustion.
    std::vector<NodeId> sample_responsive(NodeId requester, std::span<const NodeId> exclude,
                                          std::uint32_t count, Rng& rng) const;

private:
    bool eligible(NodeId candidate, NodeId requester, std::span<const NodeId> exclude) const;

    std::uint32_t population_;
    std::optional<std::uint32_t> max_inbound_;
    std::vector<std::uint32_t> inbound_;
};

}  // namespace scramble
