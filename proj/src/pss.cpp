#include "scramble/pss.hpp"

#include <algorithm>
#include <stdexcept>

namespace scramble {

SamplerView::SamplerView(std::uint32_t population, std::optional<std::uint32_t> max_inbound)
    : population_(population), max_inbound_(max_inbound) {
    if (max_inbound_) inbound_.assign(population_, 0);
}

void SamplerView::note_link_added(NodeId target) {
    if (max_inbound_) ++inbound_[target];
}

void SamplerView::note_link_removed(NodeId target) {
    if (max_inbound_) --inbound_[target];
}

std::uint32_t SamplerView::inbound(NodeId target) const {
    return max_inbound_ ? inbound_[target] : 0;
}

bool SamplerView::responsive(NodeId target) const {
    return !max_inbound_ || inbound_[target] < *max_inbound_;
}

bool SamplerView::eligible(NodeId candidate, NodeId requester,
                           std::span<const NodeId> exclude) const {
    if (candidate == requester || !responsive(candidate)) return false;
    return std::find(exclude.begin(), exclude.end(), candidate) == exclude.end();
}

std::vector<NodeId> SamplerView::sample_responsive(NodeId requester,
                                                   std::span<const NodeId> exclude,
                                                   std::uint32_t count, Rng& rng) const {
    std::vector<NodeId> picked;
    if (count == 0 || population_ == 0) return picked;
    picked.reserve(count);

    // Rejection sampling first; falls back to enumerating the eligible set
    // when the queue of misses suggests the pool is nearly exhausted.
    const std::uint64_t attempt_budget = 64 + 16ull * count;
    std::uint64_t attempts = 0;
    while (picked.size() < count && attempts < attempt_budget) {
        ++attempts;
        const NodeId w = static_cast<NodeId>(rng.uniform_index(population_));
        if (!eligible(w, requester, exclude)) continue;
        if (std::find(picked.begin(), picked.end(), w) != picked.end()) continue;
        picked.push_back(w);
    }
    if (picked.size() == count) return picked;

    std::vector<NodeId> pool;
    for (NodeId w = 0; w < population_; ++w) {
        if (!eligible(w, requester, exclude)) continue;
        if (std::find(picked.begin(), picked.end(), w) != picked.end()) continue;
        pool.push_back(w);
    }
    // Partial Fisher-Yates keeps the uniform-without-replacement contract.
    const std::size_t need = std::min<std::size_t>(count - picked.size(), pool.size());
    for (std::size_t i = 0; i < need; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
        std::swap(pool[i], pool[j]);
        picked.push_back(pool[i]);
    }
    return picked;
}

}  // namespace scramble
