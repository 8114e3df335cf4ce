#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "scramble/config.hpp"
#include "scramble/rng.hpp"

namespace scramble {

enum class EventKind : std::uint8_t {
    BlockGenerated,
    AnnouncementArrival,
    PullRequestArrival,
    PullResponseArrival,
    HeaderValidated,
    BodyValidated,
    ScoringRoundTimer,
    ClosePeriodTimer,
    PingReply,
};

const char* to_string(EventKind kind);

struct Event {
    SimTime at = 0.0;
    std::uint64_t seq = 0;  // tie-break: insertion order
    EventKind kind = EventKind::BlockGenerated;
    BlockId block = 0;
    NodeId from = kNoNode;
    NodeId to = kNoNode;
    std::uint32_t tag = 0;        // transfer chain serial / close period serial
    double value = 0.0;           // rtt sample for PingReply
    std::uint8_t round = 0;       // pull round index, 1-based
    bool carries_full_body = false;
};

struct NegativeDelay : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using EventHandle = std::uint64_t;

// Timestamp-ordered queue with a monotone clock. Events pop in (at, seq)
// order, making the whole trace a pure function of (inputs, seed).
class Scheduler {
public:
    explicit Scheduler(std::uint64_t seed) : rng_(seed) {}

    SimTime now() const { return now_; }
    Rng& rng() { return rng_; }
    bool empty() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }

    EventHandle schedule(double delay, Event ev) {
        if (delay < 0.0) throw NegativeDelay("schedule called with negative delay");
        ev.at = now_ + delay;
        ev.seq = next_seq_++;
        queue_.push(ev);
        return ev.seq;
    }

    const Event& peek() const { return queue_.top(); }

    Event pop() {
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.at;
        return ev;
    }

    // Processes events in order until the queue empties or stop() holds for
    // the next event; returns the clock. stop is evaluated before popping.
    template <typename Handler, typename Stop>
    SimTime run_until(Handler&& handler, Stop&& stop) {
        while (!queue_.empty() && !stop(queue_.top())) {
            handler(pop());
        }
        return now_;
    }

    template <typename Handler>
    SimTime run(Handler&& handler) {
        return run_until(std::forward<Handler>(handler), [](const Event&) { return false; });
    }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    SimTime now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    Rng rng_;
};

}  // namespace scramble
