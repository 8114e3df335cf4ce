#include "scramble/engine.hpp"

namespace scramble {

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::BlockGenerated: return "BlockGenerated";
        case EventKind::AnnouncementArrival: return "AnnouncementArrival";
        case EventKind::PullRequestArrival: return "PullRequestArrival";
        case EventKind::PullResponseArrival: return "PullResponseArrival";
        case EventKind::HeaderValidated: return "HeaderValidated";
        case EventKind::BodyValidated: return "BodyValidated";
        case EventKind::ScoringRoundTimer: return "ScoringRoundTimer";
        case EventKind::ClosePeriodTimer: return "ClosePeriodTimer";
        case EventKind::PingReply: return "PingReply";
    }
    return "Unknown";
}

}  // namespace scramble
