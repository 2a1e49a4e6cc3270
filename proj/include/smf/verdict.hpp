#pragma once

namespace smf {

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Pass:
        return "pass";
    case Verdict::Fail:
        return "fail";
    case Verdict::Inconclusive:
        return "inconclusive";
    }
    return "?";
}

} // namespace smf
