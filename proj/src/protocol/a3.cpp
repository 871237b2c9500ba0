#include <cmath>
#include <stdexcept>

#include "ho/protocol.hpp"

namespace ho::protocol {

void A3Config::validate() const {
  if (!(hys_db >= 0.0)) throw std::invalid_argument("a3.hys_db must be >= 0");
  for (double off : {off_db, off_n_db, off_cn_db, off_p_db, off_cp_db}) {
    if (!std::isfinite(off)) throw std::invalid_argument("a3 offsets must be finite");
  }
  if (ttt_ms < 0 || ttt_ms % kTickMs != 0) {
    throw std::invalid_argument("a3.ttt_ms must be a non-negative multiple of 10");
  }
}

void RlfConfig::validate() const {
  if (!(q_out_db < q_in_db)) throw std::invalid_argument("rlf.q_out_db must be below rlf.q_in_db");
  if (t310_ms <= 0 || n310 <= 0 || n311 <= 0 || recovery_ms <= 0) {
    throw std::invalid_argument("rlf timers and counters must be positive");
  }
}

void HoTiming::validate() const {
  if (prep_ms <= 0 || exec_ms <= 0 || mts_ms <= 0) {
    throw std::invalid_argument("timing.prep_ms, exec_ms and mts_ms must be positive");
  }
}

bool a3_entering(double m_n_dbm, double m_p_dbm, const A3Config& cfg) {
  return m_n_dbm + cfg.off_n_db + cfg.off_cn_db - cfg.hys_db > m_p_dbm + cfg.off_p_db + cfg.off_cp_db + cfg.off_db;
}

bool a3_leaving(double m_n_dbm, double m_p_dbm, const A3Config& cfg) {
  return m_n_dbm + cfg.off_n_db + cfg.off_cn_db + cfg.hys_db < m_p_dbm + cfg.off_p_db + cfg.off_cp_db + cfg.off_db;
}

}  // namespace ho::protocol
