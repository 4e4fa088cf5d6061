//! Line-oriented scenario scripts.
//!
//! ```text
//! # comment
//! boss Alice                      (optional, before any event)
//! join_primary <agent> <sub>
//! join_secondary <boss> <agent> <sub>
//! revoke <agent>
//! promote <agent> <new_boss> <sub>
//! set_inclusion <boss> <child> on|off
//! lock <agent>
//! disclose [agent]
//! broadcast <hex>
//! recover <agent>...
//! recover_message
//! audit_collusion <n_bits> <primaries>
//! emit_table <m>...
//! ```
//!
//! `<sub>` is `oracle` or `bb84[:opt,...]` with options `eve` (random-basis
//! intercept-resend), `eve=Z` / `eve=X` (fixed basis) and `p=<flip prob>`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::keytree::AgentId;
use crate::quantum::{Basis, ChannelModel, EveModel};

pub const DEFAULT_BOSS: &str = "Alice";

/// Every event directive, in grammar order.
pub const DIRECTIVES: [&str; 12] = [
    "join_primary",
    "join_secondary",
    "revoke",
    "promote",
    "set_inclusion",
    "lock",
    "disclose",
    "broadcast",
    "recover",
    "recover_message",
    "audit_collusion",
    "emit_table",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubprotocolSpec {
    Oracle,
    Bb84(ChannelModel),
}

impl FromStr for SubprotocolSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, opts) = match s.split_once(':') {
            Some((n, o)) => (n, Some(o)),
            None => (s, None),
        };
        match (name, opts) {
            ("oracle", None) => Ok(SubprotocolSpec::Oracle),
            ("bb84", opts) => {
                let mut eve = EveModel::None;
                let mut p = 0.0;
                for opt in opts.into_iter().flat_map(|o| o.split(',')) {
                    match opt.split_once('=') {
                        None if opt == "eve" => eve = EveModel::InterceptResendRandomBasis,
                        Some(("eve", "Z")) => eve = EveModel::InterceptResendFixedBasis(Basis::Z),
                        Some(("eve", "X")) => eve = EveModel::InterceptResendFixedBasis(Basis::X),
                        Some(("p", v)) => {
                            p = v
                                .parse()
                                .map_err(|_| format!("bad flip probability {v:?}"))?;
                        }
                        _ => return Err(format!("unknown bb84 option {opt:?}")),
                    }
                }
                let channel = ChannelModel::new(eve, p).map_err(|e| e.to_string())?;
                Ok(SubprotocolSpec::Bb84(channel))
            }
            _ => Err(format!("unknown sub-protocol {s:?}")),
        }
    }
}

impl fmt::Display for SubprotocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubprotocolSpec::Oracle => f.write_str("oracle"),
            SubprotocolSpec::Bb84(ch) => {
                f.write_str("bb84")?;
                let mut opts = Vec::new();
                match ch.eve() {
                    EveModel::None => {}
                    EveModel::InterceptResendRandomBasis => opts.push("eve".to_string()),
                    EveModel::InterceptResendFixedBasis(b) => opts.push(format!("eve={b}")),
                }
                if ch.flip_probability() > 0.0 {
                    opts.push(format!("p={}", ch.flip_probability()));
                }
                if !opts.is_empty() {
                    write!(f, ":{}", opts.join(","))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioEvent {
    JoinPrimary {
        agent: AgentId,
        subprotocol: SubprotocolSpec,
    },
    JoinSecondary {
        boss: AgentId,
        agent: AgentId,
        subprotocol: SubprotocolSpec,
    },
    Revoke {
        agent: AgentId,
    },
    Promote {
        agent: AgentId,
        new_boss: AgentId,
        subprotocol: SubprotocolSpec,
    },
    SetInclusion {
        boss: AgentId,
        child: AgentId,
        included: bool,
    },
    Lock {
        agent: AgentId,
    },
    Disclose {
        agent: Option<AgentId>,
    },
    Broadcast {
        message_hex: String,
    },
    Recover {
        participants: Vec<AgentId>,
    },
    RecoverMessage,
    AuditCollusion {
        n_bits: usize,
        primaries: usize,
    },
    EmitTable {
        m_values: Vec<u64>,
    },
}

impl ScenarioEvent {
    pub fn directive(&self) -> &'static str {
        match self {
            ScenarioEvent::JoinPrimary { .. } => "join_primary",
            ScenarioEvent::JoinSecondary { .. } => "join_secondary",
            ScenarioEvent::Revoke { .. } => "revoke",
            ScenarioEvent::Promote { .. } => "promote",
            ScenarioEvent::SetInclusion { .. } => "set_inclusion",
            ScenarioEvent::Lock { .. } => "lock",
            ScenarioEvent::Disclose { .. } => "disclose",
            ScenarioEvent::Broadcast { .. } => "broadcast",
            ScenarioEvent::Recover { .. } => "recover",
            ScenarioEvent::RecoverMessage => "recover_message",
            ScenarioEvent::AuditCollusion { .. } => "audit_collusion",
            ScenarioEvent::EmitTable { .. } => "emit_table",
        }
    }
}

impl fmt::Display for ScenarioEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.directive();
        match self {
            ScenarioEvent::JoinPrimary { agent, subprotocol } => {
                write!(f, "{d} {agent} {subprotocol}")
            }
            ScenarioEvent::JoinSecondary {
                boss,
                agent,
                subprotocol,
            } => {
                write!(f, "{d} {boss} {agent} {subprotocol}")
            }
            ScenarioEvent::Revoke { agent } | ScenarioEvent::Lock { agent } => {
                write!(f, "{d} {agent}")
            }
            ScenarioEvent::Promote {
                agent,
                new_boss,
                subprotocol,
            } => {
                write!(f, "{d} {agent} {new_boss} {subprotocol}")
            }
            ScenarioEvent::SetInclusion {
                boss,
                child,
                included,
            } => {
                write!(
                    f,
                    "{d} {boss} {child} {}",
                    if *included { "on" } else { "off" }
                )
            }
            ScenarioEvent::Disclose { agent: Some(a) } => write!(f, "{d} {a}"),
            ScenarioEvent::Disclose { agent: None } | ScenarioEvent::RecoverMessage => {
                f.write_str(d)
            }
            ScenarioEvent::Broadcast { message_hex } => write!(f, "{d} {message_hex}"),
            ScenarioEvent::Recover { participants } => {
                let names: Vec<&str> = participants.iter().map(AgentId::as_str).collect();
                write!(f, "{d} {}", names.join(" "))
            }
            ScenarioEvent::AuditCollusion { n_bits, primaries } => {
                write!(f, "{d} {n_bits} {primaries}")
            }
            ScenarioEvent::EmitTable { m_values } => {
                let ms: Vec<String> = m_values.iter().map(u64::to_string).collect();
                write!(f, "{d} {}", ms.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLine {
    /// 1-based source line.
    pub line: usize,
    pub event: ScenarioEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub boss: AgentId,
    pub events: Vec<ScenarioLine>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut boss = None;
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |reason: String| ParseError { line, reason };
        let mut words = content.split_whitespace();
        let directive = words.next().expect("nonempty line");
        let args: Vec<&str> = words.collect();

        if directive == "boss" {
            if !events.is_empty() || boss.is_some() {
                return Err(err("boss must be declared once, before any event".into()));
            }
            let [name] = args[..] else {
                return Err(err("boss takes exactly one name".into()));
            };
            boss = Some(AgentId::from(name));
            continue;
        }
        let event = parse_event(directive, &args).map_err(err)?;
        events.push(ScenarioLine { line, event });
    }
    Ok(Scenario {
        boss: boss.unwrap_or_else(|| AgentId::from(DEFAULT_BOSS)),
        events,
    })
}

fn parse_event(directive: &str, args: &[&str]) -> Result<ScenarioEvent, String> {
    let arity = |n: usize| -> Result<(), String> {
        if args.len() != n {
            return Err(format!(
                "{directive} takes {n} argument(s), got {}",
                args.len()
            ));
        }
        Ok(())
    };
    let sub = |s: &str| s.parse::<SubprotocolSpec>();
    let id = |s: &str| AgentId::from(s);
    let number = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| format!("expected a number, got {s:?}"))
    };

    Ok(match directive {
        "join_primary" => {
            arity(2)?;
            ScenarioEvent::JoinPrimary {
                agent: id(args[0]),
                subprotocol: sub(args[1])?,
            }
        }
        "join_secondary" => {
            arity(3)?;
            ScenarioEvent::JoinSecondary {
                boss: id(args[0]),
                agent: id(args[1]),
                subprotocol: sub(args[2])?,
            }
        }
        "revoke" => {
            arity(1)?;
            ScenarioEvent::Revoke { agent: id(args[0]) }
        }
        "promote" => {
            arity(3)?;
            ScenarioEvent::Promote {
                agent: id(args[0]),
                new_boss: id(args[1]),
                subprotocol: sub(args[2])?,
            }
        }
        "set_inclusion" => {
            arity(3)?;
            let included = match args[2] {
                "on" | "true" => true,
                "off" | "false" => false,
                other => return Err(format!("expected on/off, got {other:?}")),
            };
            ScenarioEvent::SetInclusion {
                boss: id(args[0]),
                child: id(args[1]),
                included,
            }
        }
        "lock" => {
            arity(1)?;
            ScenarioEvent::Lock { agent: id(args[0]) }
        }
        "disclose" => match args {
            [] => ScenarioEvent::Disclose { agent: None },
            [a] => ScenarioEvent::Disclose { agent: Some(id(a)) },
            _ => return Err("disclose takes at most one agent".into()),
        },
        "broadcast" => {
            arity(1)?;
            if !args[0].chars().all(|c| c.is_ascii_hexdigit()) {
                return Err(format!("message must be hex, got {:?}", args[0]));
            }
            ScenarioEvent::Broadcast {
                message_hex: args[0].to_ascii_lowercase(),
            }
        }
        "recover" => {
            if args.is_empty() {
                return Err("recover needs at least one participant".into());
            }
            ScenarioEvent::Recover {
                participants: args.iter().map(|a| id(a)).collect(),
            }
        }
        "recover_message" => {
            arity(0)?;
            ScenarioEvent::RecoverMessage
        }
        "audit_collusion" => {
            arity(2)?;
            ScenarioEvent::AuditCollusion {
                n_bits: number(args[0])? as usize,
                primaries: number(args[1])? as usize,
            }
        }
        "emit_table" => {
            if args.is_empty() {
                return Err("emit_table needs at least one party count".into());
            }
            ScenarioEvent::EmitTable {
                m_values: args.iter().map(|a| number(a)).collect::<Result<_, _>>()?,
            }
        }
        other => return Err(format!("unknown directive {other:?}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn join_primary_bb84_defaults() {
        let s = parse_scenario("join_primary Bob bb84").unwrap();
        assert_eq!(
            s.events[0].event,
            ScenarioEvent::JoinPrimary {
                agent: AgentId::from("Bob"),
                subprotocol: SubprotocolSpec::Bb84(ChannelModel::ideal()),
            }
        );
        assert_eq!(s.boss, AgentId::from("Alice"));
    }

    #[test]
    fn missing_argument_reports_line() {
        let err = parse_scenario("# header\n\nrevoke\n").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn unknown_directive() {
        let err = parse_scenario("join_primary Bob oracle\nexplode Bob").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.reason.contains("explode"));
    }

    #[test]
    fn directives_are_case_sensitive() {
        assert!(parse_scenario("Revoke Bob").is_err());
    }

    #[test]
    fn subprotocol_options() {
        let eve: SubprotocolSpec = "bb84:eve".parse().unwrap();
        assert_eq!(eve, SubprotocolSpec::Bb84(ChannelModel::intercept_resend()));
        let noisy: SubprotocolSpec = "bb84:eve=X,p=0.05".parse().unwrap();
        assert_eq!(
            noisy,
            SubprotocolSpec::Bb84(
                ChannelModel::new(EveModel::InterceptResendFixedBasis(Basis::X), 0.05).unwrap()
            )
        );
        assert!("bb84:p=2".parse::<SubprotocolSpec>().is_err());
        assert!("b92".parse::<SubprotocolSpec>().is_err());
        assert!("oracle:eve".parse::<SubprotocolSpec>().is_err());
    }

    #[test]
    fn boss_header() {
        let s = parse_scenario("boss Zoe\njoin_primary Bob oracle").unwrap();
        assert_eq!(s.boss, AgentId::from("Zoe"));
        assert!(parse_scenario("join_primary Bob oracle\nboss Zoe").is_err());
    }

    #[test]
    fn display_round_trips() {
        let text = "\
join_primary Bob oracle
join_secondary Bob Elsa bb84:eve=Z,p=0.1
revoke Elsa
promote Elsa Alice bb84:eve
set_inclusion Bob Elsa off
lock Bob
disclose
disclose Bob
broadcast 0f
recover Bob Charlie
recover_message
audit_collusion 2 3
emit_table 3 50
";
        let s = parse_scenario(text).unwrap();
        let rendered: Vec<String> = s.events.iter().map(|l| l.event.to_string()).collect();
        assert_eq!(rendered.join("\n") + "\n", text);
    }

    #[test]
    fn every_directive_parses() {
        let samples = [
            "join_primary A oracle",
            "join_secondary A B oracle",
            "revoke A",
            "promote A B oracle",
            "set_inclusion A B on",
            "lock A",
            "disclose",
            "broadcast ff",
            "recover A",
            "recover_message",
            "audit_collusion 1 2",
            "emit_table 3",
        ];
        for (directive, sample) in DIRECTIVES.iter().zip(samples) {
            let s = parse_scenario(sample).unwrap();
            assert_eq!(s.events[0].event.directive(), *directive);
        }
    }
}
