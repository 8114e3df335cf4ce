#include "scramble/simulation.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

#include "scramble/metrics.hpp"

namespace scramble {

Simulation::Simulation(const ValidatedConfig& cfg, const LatencyModel& model, SimOptions options)
    : cfg_(cfg),
      model_(model),
      opts_(options),
      sched_(cfg->seed),
      sampler_(cfg->node_count, cfg->max_inbound),
      miner_rng_(derive_stream(cfg->seed, stream::miners)) {
    if (model_.node_count() != cfg->node_count)
        throw DimensionError("latency model node count does not match config node_count");

    const std::uint32_t n = cfg->node_count;
    nodes_.resize(n);
    selected_by_.resize(n);
    stamp_.assign(n, 0);
    node_rng_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) node_rng_.push_back(derive_stream(cfg->seed, stream::node, i));
    if (opts_.jitter_fraction > 0.0) {
        jitter_rng_.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i)
            jitter_rng_.push_back(derive_stream(cfg->seed, stream::jitter, i));
    }
    bootstrap();
}

bool Simulation::scoring_active() const {
    return opts_.heuristics_enabled && cfg_.scoring_target() > 0;
}

bool Simulation::close_active() const {
    return opts_.heuristics_enabled && cfg_.close_target() > 0;
}

double Simulation::link_delay(NodeId from, NodeId to) {
    const double base = model_.latency(from, to);
    if (opts_.jitter_fraction <= 0.0) return base;
    const double f = opts_.jitter_fraction;
    return base * (1.0 + jitter_rng_[from].uniform_real(-f, f));
}

bool Simulation::delivered(NodeId n, BlockId block) const {
    if (delivered_bits_.empty()) return false;
    const std::size_t words = (nodes_.size() + 63) / 64;
    const std::size_t idx = static_cast<std::size_t>(block) * words + n / 64;
    return (delivered_bits_[idx] >> (n % 64)) & 1u;
}

void Simulation::mark_delivered(NodeId n, BlockId block) {
    const std::size_t words = (nodes_.size() + 63) / 64;
    const std::size_t idx = static_cast<std::size_t>(block) * words + n / 64;
    delivered_bits_[idx] |= 1ull << (n % 64);
}

void Simulation::add_scoring_link(NodeId n, NodeId peer) {
    nodes_[n].scoring.push_back(ScoringPeer{peer, 0.0});
    selected_by_[peer].push_back(n);
    sampler_.note_link_added(peer);
}

void Simulation::add_close_link(NodeId n, NodeId peer, std::uint32_t joined_period) {
    nodes_[n].close.push_back(ClosePeer{peer, 0.0, 0, joined_period});
    selected_by_[peer].push_back(n);
    sampler_.note_link_added(peer);
}

void Simulation::drop_link(NodeId n, NodeId peer) {
    auto& rev = selected_by_[peer];
    const auto it = std::find(rev.begin(), rev.end(), n);
    assert(it != rev.end());
    rev.erase(it);
    sampler_.note_link_removed(peer);
}

void Simulation::bootstrap() {
    const std::uint32_t ss_target = cfg_.scoring_target();
    const std::uint32_t cs_target = cfg_.close_target();

    for (NodeId n = 0; n < nodes_.size(); ++n) {
        nodes_[n].id = n;
        auto draw = sampler_.sample_responsive(n, {}, ss_target + cs_target, node_rng_[n]);
        if (draw.size() < ss_target + cs_target) ++sampler_shortfalls_;
        for (std::size_t i = 0; i < draw.size(); ++i) {
            if (i < ss_target) add_scoring_link(n, draw[i]);
            else add_close_link(n, draw[i], 0);
        }
    }

    if (close_active()) {
        for (NodeId n = 0; n < nodes_.size(); ++n) {
            // Phase-shift the close cycle per node to avoid global synchrony.
            // The timer is scheduled first so a reply landing exactly on the
            // boundary belongs to the closed period and is discarded.
            const double phase = node_rng_[n].uniform_real(0.0, cfg_->close_period);
            Event ev;
            ev.kind = EventKind::ClosePeriodTimer;
            ev.to = n;
            sched_.schedule(phase, ev);
            schedule_ping_cycle(n, 0.0, phase);
        }
    }

    if (opts_.observer)
        for (const auto& node : nodes_) opts_.observer->on_bootstrap(node);
}

void Simulation::schedule_ping_cycle(NodeId n, SimTime window_start, double window_len) {
    if (window_len <= 0.0) return;
    const auto& node = nodes_[n];
    const double spacing = window_len / cfg_->ping_count;
    for (const auto& member : node.close) {
        for (std::uint32_t j = 0; j < cfg_->ping_count; ++j) {
            const double send_offset = (window_start - sched_.now()) + j * spacing;
            const double rtt = link_delay(n, member.peer) + link_delay(member.peer, n);
            Event ev;
            ev.kind = EventKind::PingReply;
            ev.to = n;
            ev.from = member.peer;
            ev.value = rtt;
            ev.tag = node.close_period;
            sched_.schedule(send_offset + rtt, ev);
        }
    }
}

void Simulation::run_blocks(std::uint32_t calibration_blocks, std::uint32_t measurement_blocks) {
    total_blocks_ = calibration_blocks + measurement_blocks;
    record_from_ = calibration_blocks;
    records_.clear();
    records_.reserve(measurement_blocks);

    const std::size_t words = (nodes_.size() + 63) / 64;
    delivered_bits_.assign(static_cast<std::size_t>(total_blocks_) * words, 0);

    if (opts_.track_calibration_p90 && calibration_blocks > 0) {
        round_offsets_.assign((calibration_blocks + cfg_->k - 1) / cfg_->k, {});
    }

    if (total_blocks_ > 0) {
        Event ev;
        ev.kind = EventKind::BlockGenerated;
        ev.block = 0;
        sched_.schedule(0.0, ev);
    }

    sched_.run_until([this](const Event& ev) { handle(ev); },
                     [this](const Event&) {
                         return blocks_generated_ == total_blocks_ && transfer_inflight_ == 0;
                     });

    if (!round_offsets_.empty()) {
        calibration_p90_.clear();
        for (std::size_t r = 0; r < round_offsets_.size(); ++r) {
            const std::size_t blocks_in_round =
                std::min<std::size_t>(cfg_->k, calibration_blocks - r * cfg_->k);
            const std::size_t pairs = blocks_in_round * nodes_.size();
            const std::size_t never = pairs - round_offsets_[r].size();
            calibration_p90_.push_back(
                percentile_from_offsets(std::move(round_offsets_[r]), never, 0.9));
        }
        round_offsets_.clear();
    }
}

void Simulation::run_idle(SimTime until) {
    sched_.run_until([this](const Event& ev) { handle(ev); },
                     [until](const Event& next) { return next.at > until; });
}

void Simulation::handle(const Event& ev) {
    ++events_processed_;
    if (opts_.event_sink) (*opts_.event_sink)(ev);
    switch (ev.kind) {
        case EventKind::BlockGenerated: on_block_generated(ev); break;
        case EventKind::AnnouncementArrival: on_announcement_arrival(ev); break;
        case EventKind::PullRequestArrival: on_pull_request(ev); break;
        case EventKind::PullResponseArrival: on_pull_response(ev); break;
        case EventKind::HeaderValidated: on_header_validated(ev); break;
        case EventKind::BodyValidated: on_body_validated(ev); break;
        case EventKind::ScoringRoundTimer: on_scoring_round(ev); break;
        case EventKind::ClosePeriodTimer: on_close_period(ev); break;
        case EventKind::PingReply: on_ping_reply(ev); break;
    }
}

void Simulation::on_block_generated(const Event& ev) {
    const BlockId block = ev.block;
    const NodeId miner = static_cast<NodeId>(miner_rng_.uniform_index(nodes_.size()));
    const SimTime now = sched_.now();

    // Entries for blocks two generations back are dead by construction
    // (inter_block_gap far exceeds any in-flight latency).
    if (block >= 2)
        for (auto& node : nodes_) node.blocks.collect_before(block - 1);

    if (block >= record_from_) {
        DisseminationRecord rec;
        rec.block = block;
        rec.miner = miner;
        rec.generated_at = now;
        rec.deliver_time_of.assign(nodes_.size(), std::numeric_limits<double>::quiet_NaN());
        records_.push_back(std::move(rec));
    }
    if (opts_.observer) opts_.observer->on_block_generated(block, miner, now);

    // The miner holds its own block fully validated at generation time.
    auto& entry = nodes_[miner].blocks.get_or_insert(block);
    entry.stage = BlockStage::Delivered;
    entry.score_state = 2;  // own blocks never open scoring windows
    deliver(miner, block, now, kNoNode);

    ++blocks_generated_;
    if (blocks_generated_ < total_blocks_) {
        Event next;
        next.kind = EventKind::BlockGenerated;
        next.block = block + 1;
        sched_.schedule(cfg_->inter_block_gap, next);
    }
}

void Simulation::deliver(NodeId n, BlockId block, SimTime at, NodeId source) {
    mark_delivered(n, block);
    if (block >= record_from_) {
        records_[block - record_from_].deliver_time_of[n] = at;
    } else if (!round_offsets_.empty()) {
        round_offsets_[block / cfg_->k].push_back(at - block * cfg_->inter_block_gap);
    }
    if (opts_.observer) opts_.observer->on_delivery(n, block, at, source);

    announce(n, block, source);

    if (source != kNoNode && scoring_active()) {
        if (++nodes_[n].blocks_this_round == cfg_->k) {
            Event ev;
            ev.kind = EventKind::ScoringRoundTimer;
            ev.to = n;
            sched_.schedule(0.0, ev);
            ++transfer_inflight_;
        }
    }
}

void Simulation::announce(NodeId sender, BlockId block, NodeId exclude) {
    ++stamp_epoch_;
    if (exclude != kNoNode) stamp_[exclude] = stamp_epoch_;
    stamp_[sender] = stamp_epoch_;

    const bool carries_body = cfg_.pull_rounds() == 0;
    auto send_to = [&](NodeId peer) {
        if (stamp_[peer] == stamp_epoch_) return;
        stamp_[peer] = stamp_epoch_;
        Event ev;
        ev.kind = EventKind::AnnouncementArrival;
        ev.block = block;
        ev.from = sender;
        ev.to = peer;
        ev.carries_full_body = carries_body;
        sched_.schedule(link_delay(sender, peer), ev);
        ++transfer_inflight_;
    };

    const auto& node = nodes_[sender];
    for (const auto& p : node.scoring) send_to(p.peer);
    for (const auto& p : node.close) send_to(p.peer);
    if (cfg_->forwarding_mode == ForwardingMode::undirected)
        for (NodeId p : selected_by_[sender]) send_to(p);
}

void Simulation::start_chain(NodeId n, BlockId block, BlockLocal& e, NodeId from) {
    ++e.chain;
    e.source = from;
    if (e.stage == BlockStage::Unseen) e.stage = BlockStage::HeaderReceived;
    Event ev;
    ev.kind = EventKind::HeaderValidated;
    ev.block = block;
    ev.to = n;
    ev.tag = e.chain;
    sched_.schedule(cfg_->header_validation, ev);
    ++transfer_inflight_;
}

void Simulation::on_announcement_arrival(const Event& ev) {
    --transfer_inflight_;
    const NodeId n = ev.to;
    const NodeId from = ev.from;
    const BlockId block = ev.block;
    const SimTime now = sched_.now();
    NodeState& node = nodes_[n];

    if (opts_.observer) opts_.observer->on_announcement(n, from, block, now);

    const bool was_delivered = delivered(n, block);
    BlockLocal* entry = node.blocks.find(block);
    if (was_delivered && entry == nullptr) return;  // stale, already collected

    if (entry == nullptr) entry = &node.blocks.get_or_insert(block);

    if (scoring_active()) {
        if (auto award = apply_scoring_receipt(*entry, node.in_scoring(from), from, now)) {
            for (auto& p : node.scoring) {
                if (p.peer == award->peer) {
                    p.score += award->points;
                    break;
                }
            }
            if (opts_.observer) opts_.observer->on_score_award(n, award->peer, block, award->points);
        }
    }

    if (was_delivered) return;

    // Remaining cost through this announcer: header validation, one full RTT
    // per pull round, then body validation.
    const double one_way = model_.latency(from, n);
    const double candidate = now + cfg_->header_validation +
                             cfg_.pull_rounds() * 2.0 * one_way + cfg_->body_validation;
    if (entry->stage == BlockStage::Unseen) {
        ++transfers_started_;
        entry->projected = candidate;
        start_chain(n, block, *entry, from);
    } else if (opts_.reroute_on_better_announcement && candidate < entry->projected) {
        ++transfer_reroutes_;
        entry->projected = candidate;
        start_chain(n, block, *entry, from);
    }
}

void Simulation::on_header_validated(const Event& ev) {
    --transfer_inflight_;
    const NodeId n = ev.to;
    NodeState& node = nodes_[n];
    BlockLocal* entry = node.blocks.find(ev.block);
    if (!entry || entry->chain != ev.tag || delivered(n, ev.block)) return;

    if (entry->stage < BlockStage::HeaderValid) entry->stage = BlockStage::HeaderValid;

    Event next;
    next.block = ev.block;
    next.tag = ev.tag;
    if (cfg_.pull_rounds() == 0) {
        next.kind = EventKind::BodyValidated;
        next.to = n;
        sched_.schedule(cfg_->body_validation, next);
    } else {
        if (entry->stage < BlockStage::Pulling) entry->stage = BlockStage::Pulling;
        entry->pull_round = std::max<std::uint8_t>(entry->pull_round, 1);
        next.kind = EventKind::PullRequestArrival;
        next.from = n;
        next.to = entry->source;
        next.round = 1;
        sched_.schedule(link_delay(n, entry->source), next);
    }
    ++transfer_inflight_;
}

void Simulation::on_pull_request(const Event& ev) {
    --transfer_inflight_;
    // Pulls are served instantly; the announcer always holds the body.
    Event reply;
    reply.kind = EventKind::PullResponseArrival;
    reply.block = ev.block;
    reply.from = ev.to;
    reply.to = ev.from;
    reply.round = ev.round;
    reply.tag = ev.tag;
    sched_.schedule(link_delay(ev.to, ev.from), reply);
    ++transfer_inflight_;
}

void Simulation::on_pull_response(const Event& ev) {
    --transfer_inflight_;
    const NodeId n = ev.to;
    NodeState& node = nodes_[n];
    BlockLocal* entry = node.blocks.find(ev.block);
    if (!entry || entry->chain != ev.tag || delivered(n, ev.block)) return;

    Event next;
    next.block = ev.block;
    next.tag = ev.tag;
    if (ev.round < cfg_.pull_rounds()) {
        entry->pull_round = std::max<std::uint8_t>(entry->pull_round,
                                                   static_cast<std::uint8_t>(ev.round + 1));
        next.kind = EventKind::PullRequestArrival;
        next.from = n;
        next.to = entry->source;
        next.round = static_cast<std::uint8_t>(ev.round + 1);
        sched_.schedule(link_delay(n, entry->source), next);
    } else {
        next.kind = EventKind::BodyValidated;
        next.to = n;
        sched_.schedule(cfg_->body_validation, next);
    }
    ++transfer_inflight_;
}

void Simulation::on_body_validated(const Event& ev) {
    --transfer_inflight_;
    const NodeId n = ev.to;
    NodeState& node = nodes_[n];
    BlockLocal* entry = node.blocks.find(ev.block);
    if (!entry || entry->chain != ev.tag || delivered(n, ev.block)) return;

    entry->stage = BlockStage::Delivered;
    deliver(n, ev.block, sched_.now(), entry->source);
}

void Simulation::on_scoring_round(const Event& ev) {
    --transfer_inflight_;
    const NodeId n = ev.to;
    NodeState& node = nodes_[n];

    std::vector<ScoringPeer> before;
    if (opts_.observer) before.assign(node.scoring.begin(), node.scoring.end());

    std::vector<NodeId> peers;
    std::vector<double> metric;
    peers.reserve(node.scoring.size());
    for (const auto& p : node.scoring) {
        peers.push_back(p.peer);
        metric.push_back(-p.score);  // rank by score descending
    }
    const RankCutResult cut = rank_and_cut(peers, metric, {}, cfg_->S);

    for (NodeId peer : cut.removed) drop_link(n, peer);

    node.scoring.clear();
    for (NodeId peer : cut.retained) node.scoring.push_back(ScoringPeer{peer, 0.0});

    // A window with no second receipt by round end awards nothing.
    node.blocks.settle_open_windows();

    std::vector<NodeId> exclude;
    exclude.reserve(node.scoring.size() + node.close.size());
    for (const auto& p : node.scoring) exclude.push_back(p.peer);
    for (const auto& p : node.close) exclude.push_back(p.peer);

    const std::uint32_t target = cfg_.scoring_target();
    std::vector<NodeId> added;
    if (node.scoring.size() < target) {
        added = sampler_.sample_responsive(
            n, exclude, target - static_cast<std::uint32_t>(node.scoring.size()), node_rng_[n]);
        if (node.scoring.size() + added.size() < target) ++sampler_shortfalls_;
        for (NodeId peer : added) add_scoring_link(n, peer);
    }

    node.blocks_this_round = 0;
    ++node.scoring_round;

    if (opts_.observer) opts_.observer->on_scoring_refresh(node, before, cut.removed, added);
}

void Simulation::on_close_period(const Event& ev) {
    const NodeId n = ev.to;
    NodeState& node = nodes_[n];
    const std::uint32_t ended = node.close_period;

    std::vector<ClosePeer> before;
    if (opts_.observer) before.assign(node.close.begin(), node.close.end());

    std::vector<NodeId> peers;
    std::vector<double> metric;
    std::vector<bool> exempt;
    for (const auto& p : node.close) {
        peers.push_back(p.peer);
        metric.push_back(p.average_rtt());
        // Sampleless members in their first period get a grace period.
        exempt.push_back(p.joined_period == ended && p.rtt_count == 0);
    }
    const RankCutResult cut = rank_and_cut(peers, metric, exempt, cfg_->C);

    for (NodeId peer : cut.removed) drop_link(n, peer);

    std::vector<ClosePeer> survivors;
    for (NodeId peer : cut.retained) {
        const ClosePeer* old = node.find_close(peer);
        survivors.push_back(ClosePeer{peer, 0.0, 0, old->joined_period});
    }
    node.close = std::move(survivors);

    std::vector<NodeId> exclude;
    for (const auto& p : node.scoring) exclude.push_back(p.peer);
    for (const auto& p : node.close) exclude.push_back(p.peer);

    const std::uint32_t target = cfg_.close_target();
    std::vector<NodeId> added;
    if (node.close.size() < target) {
        added = sampler_.sample_responsive(
            n, exclude, target - static_cast<std::uint32_t>(node.close.size()), node_rng_[n]);
        if (node.close.size() + added.size() < target) ++sampler_shortfalls_;
        for (NodeId peer : added) add_close_link(n, peer, ended + 1);
    }

    node.close_period = ended + 1;

    Event next;
    next.kind = EventKind::ClosePeriodTimer;
    next.to = n;
    sched_.schedule(cfg_->close_period, next);
    schedule_ping_cycle(n, sched_.now(), cfg_->close_period);

    if (opts_.observer) opts_.observer->on_close_refresh(node, before, cut.removed, added, ended);
}

void Simulation::on_ping_reply(const Event& ev) {
    NodeState& node = nodes_[ev.to];
    if (ev.tag != node.close_period) return;  // reply from a previous period
    if (ClosePeer* member = node.find_close(ev.from)) {
        member->rtt_sum += ev.value;
        ++member->rtt_count;
    }
}

TopologySnapshot Simulation::snapshot() const {
    TopologySnapshot snap;
    snap.node_count = static_cast<std::uint32_t>(nodes_.size());
    snap.mode = cfg_->forwarding_mode;
    for (const auto& node : nodes_) {
        std::vector<TopologyEntry> rows;
        for (const auto& p : node.scoring)
            rows.push_back(TopologyEntry{node.id, PeerSet::scoring, p.peer, p.score, 0});
        for (const auto& p : node.close)
            rows.push_back(
                TopologyEntry{node.id, PeerSet::close, p.peer, p.average_rtt(), p.joined_period});
        std::sort(rows.begin(), rows.end(), [](const TopologyEntry& a, const TopologyEntry& b) {
            if (a.set != b.set) return a.set < b.set;
            return a.peer < b.peer;
        });
        snap.entries.insert(snap.entries.end(), rows.begin(), rows.end());
    }
    return snap;
}

}  // namespace scramble
