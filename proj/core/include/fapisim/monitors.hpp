#pragma once

#include <set>

#include "fapisim/runtime.hpp"

namespace fapisim {

struct MonitorVerdict {
  std::string property;  // authorization | authentication | session_integrity
  std::string detail;
  size_t stepIndex = 0;
};

// Scenario facts the trace predicates need: who owns which identity and
// which roles are honest.
struct MonitorContext {
  std::set<Term> attackerIdentities;
  std::set<Term> honestAsDomains;
  std::set<std::string> honestClientPids;
  std::set<std::string> honestBrowserPids;
};

// No secret resource nonce issued for an honest identity ever becomes
// derivable by the attacker.
std::vector<MonitorVerdict> checkAuthorization(const Trace& t,
                                               const MonitorContext& mc);

// No service session id for an honest identity's login ever becomes
// derivable by the attacker.
std::vector<MonitorVerdict> checkAuthentication(const Trace& t,
                                                const MonitorContext& mc);

// A login session at an honest webserver client only completes (login or
// resource delivery) if the owning browser started it, and — when the AS is
// honest — authenticated for exactly that session and identity.
std::vector<MonitorVerdict> checkSessionIntegrity(const Trace& t,
                                                  const MonitorContext& mc);

std::vector<MonitorVerdict> checkAll(const Trace& t, const MonitorContext& mc);

size_t countNotes(const Trace& t, const std::string& type);

}  // namespace fapisim
