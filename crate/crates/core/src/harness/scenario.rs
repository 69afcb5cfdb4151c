//! Declarative scenarios: authorities, users and a list of steps with
//! expected outcomes, read from TOML.
//!
//! ```toml
//! seed = 7
//! transport = "inproc"          # or "tcp"; optional
//!
//! [[authorities]]
//! id = "aa1"
//!
//! [[users]]
//! gid = "alice"
//! attributes = ["aa1:doctor"]
//!
//! [[steps]]
//! action = "encrypt"
//! name = "rec1"
//! policy = "aa1:doctor OR aa1:admin"
//! message = "hello"
//!
//! [[steps]]
//! action = "decrypt"
//! user = "alice"
//! ciphertext = "rec1"
//! expect = "ok"                 # ok | not_satisfied | verification_failed | unknown_user
//! tamper = "c_se"               # optional: c_se | c0 | x_inv
//!
//! [[steps]]
//! action = "revoke"
//! user = "alice"
//!
//! [[steps]]
//! action = "enroll"
//! user = "bob"
//! attributes = ["aa1:admin"]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::deploy::{Deployment, TransportKind};
use crate::codec::Encode;
use crate::error::{Error, Result};
use crate::ids::{Attribute, AuthorityId, Gid};
use crate::lsss::PolicyNode;
use crate::protocol::{CloudConfig, CloudServer, CtId, DataOwner, DataUser, Request, Response};
use crate::scheme::{global_setup, user_dec, user_dec_encoded, UserKeys};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub transport: Option<TransportKind>,
    pub authorities: Vec<AuthoritySpec>,
    #[serde(default)]
    pub users: Vec<UserSpec>,
    #[serde(default)]
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AuthoritySpec {
    pub id: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub gid: String,
    #[serde(default)]
    pub attributes: Vec<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Enroll {
        user: String,
        attributes: Vec<String>,
    },
    Encrypt {
        name: String,
        policy: String,
        #[serde(default)]
        message: String,
    },
    Decrypt {
        user: String,
        ciphertext: String,
        #[serde(default)]
        expect: Outcome,
        tamper: Option<Tamper>,
    },
    Revoke {
        user: String,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    Ok,
    NotSatisfied,
    VerificationFailed,
    UnknownUser,
    WrongPlaintext,
    Error,
}

impl Outcome {
    pub fn of<T>(r: &Result<T>) -> Outcome {
        r.as_ref().err().map_or(Outcome::Ok, Outcome::of_error)
    }

    pub fn of_error(e: &Error) -> Outcome {
        match e {
            Error::NotSatisfied => Outcome::NotSatisfied,
            Error::VerificationFailed => Outcome::VerificationFailed,
            Error::UnknownUser(_) => Outcome::UnknownUser,
            _ => Outcome::Error,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tamper {
    /// Flip one byte of the symmetric ciphertext in the partial result.
    CSe,
    /// Flip one byte of `C0` in the partial result.
    C0,
    /// Finish with a wrong `x^-1`.
    XInv,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub transport: Option<TransportKind>,
    pub data_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepReport {
    pub index: usize,
    pub action: String,
    pub detail: String,
    pub expected: Option<Outcome>,
    pub outcome: Outcome,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioReport {
    pub seed: u64,
    pub transport: TransportKind,
    pub steps: Vec<StepReport>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn to_table(&self) -> String {
        let mut out = format!("scenario seed={} transport={}\n", self.seed, self.transport);
        for s in &self.steps {
            let expected = s.expected.map(|e| format!(" expect={e:?}")).unwrap_or_default();
            out.push_str(&format!(
                "{:>3} {:<4} {:<8} {}{} -> {:?}{}\n",
                s.index,
                if s.passed { "ok" } else { "FAIL" },
                s.action,
                s.detail,
                expected,
                s.outcome,
                s.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default()
            ));
        }
        out.push_str(if self.passed { "result: pass\n" } else { "result: FAIL\n" });
        out
    }
}

struct Runner {
    dep: Deployment,
    owner: DataOwner,
    users: BTreeMap<String, DataUser>,
    cts: BTreeMap<String, (CtId, Vec<u8>)>,
}

fn attrs(names: &[String]) -> Result<Vec<Attribute>> {
    names.iter().map(|n| Attribute::new(n)).collect()
}

impl Runner {
    fn user(&mut self, gid: &str) -> Result<&mut DataUser> {
        if !self.users.contains_key(gid) {
            let user = self.dep.new_user(&Gid::new(gid)?)?;
            self.users.insert(gid.to_string(), user);
        }
        Ok(self.users.get_mut(gid).expect("inserted above"))
    }

    fn enroll(&mut self, gid: &str, names: &[String]) -> Result<()> {
        let list = attrs(names)?;
        let mut user = self.user(gid)?.clone();
        self.dep.enroll(&mut user, &list)?;
        self.users.insert(gid.to_string(), user);
        Ok(())
    }

    fn encrypt(&mut self, name: &str, policy: &str, message: &str) -> Result<()> {
        let policy: PolicyNode = policy.parse()?;
        let leaves: Vec<Attribute> = policy.leaves().into_iter().cloned().collect();
        let missing: Vec<Attribute> =
            leaves.iter().filter(|a| self.owner.pool().available(a) == 0).cloned().collect();
        self.owner.precompute_pool(&missing, 1)?;
        let id = self.owner.encrypt(message.as_bytes(), &policy)?;
        self.cts.insert(name.to_string(), (id, message.as_bytes().to_vec()));
        Ok(())
    }

    fn decrypt(&mut self, gid: &str, ct: &str, tamper: Option<Tamper>) -> (Outcome, Option<String>) {
        let result = (|| {
            let (id, expected) = self
                .cts
                .get(ct)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("no ciphertext named {ct}")))?;
            let user = self.users.get(gid).ok_or_else(|| Error::InvalidInput(format!("no user {gid}")))?;
            let cs = self.dep.cloud_link();
            let plain = match tamper {
                None => user.decrypt(cs, &id)?,
                Some(t) => {
                    let labels = user.derive_labels(&user.fetch_h(cs, &id)?)?;
                    let pct = user.request_dec(cs, &id, labels)?;
                    let gp = self.dep.params();
                    match t {
                        Tamper::XInv => {
                            let wrong = UserKeys {
                                x_inv: user.keys().x_inv + crate::group::Scalar::one(),
                                ..user.keys().clone()
                            };
                            user_dec(gp, &wrong, &pct)?
                        }
                        Tamper::C0 | Tamper::CSe => {
                            let mut bytes = pct.to_bytes();
                            let at = if t == Tamper::C0 { 7 } else { bytes.len() - 5 };
                            bytes[at] ^= 0x01;
                            user_dec_encoded(gp, user.keys(), &bytes)?
                        }
                    }
                }
            };
            Ok((plain, expected))
        })();
        match result {
            Ok((plain, expected)) if plain == expected => (Outcome::Ok, None),
            Ok(_) => (Outcome::WrongPlaintext, None),
            Err(e) => (Outcome::of_error(&e), Some(e.to_string())),
        }
    }
}

pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<ScenarioReport> {
    let gp = global_setup(128)?;
    let seed = opts.seed.unwrap_or(scenario.seed);
    let transport = opts.transport.or(scenario.transport).unwrap_or_default();
    let cloud = match &opts.data_dir {
        Some(dir) => {
            let cloud_dir = dir.join("cloud");
            if cloud_dir.read_dir().is_ok_and(|mut d| d.next().is_some()) {
                return Err(Error::InvalidInput(format!(
                    "{} already holds cloud state; scenarios need a fresh directory",
                    cloud_dir.display()
                )));
            }
            CloudServer::open(gp, &cloud_dir, CloudConfig::default())?
        }
        None => CloudServer::in_memory(gp),
    };
    let mut dep = Deployment::new(transport, seed, cloud)?;
    for a in &scenario.authorities {
        dep.add_authority(&AuthorityId::new(&a.id)?)?;
    }
    let owner = dep.owner()?;
    let mut runner = Runner { dep, owner, users: BTreeMap::new(), cts: BTreeMap::new() };
    for u in &scenario.users {
        runner.enroll(&u.gid, &u.attributes)?;
    }

    let mut steps = Vec::new();
    for (index, step) in scenario.steps.iter().enumerate() {
        let report = match step {
            Step::Enroll { user, attributes } => {
                let r = runner.enroll(user, attributes);
                simple(index, "enroll", format!("{user} {attributes:?}"), r)
            }
            Step::Encrypt { name, policy, message } => {
                let r = runner.encrypt(name, policy, message);
                simple(index, "encrypt", format!("{name} under {policy}"), r)
            }
            Step::Revoke { user } => {
                let r = Gid::new(user)
                    .and_then(|gid| runner.dep.cloud_link().call(&Request::Revoke { gid }))
                    .and_then(Response::into_ack)
                    .map(|_| ());
                simple(index, "revoke", user.clone(), r)
            }
            Step::Decrypt { user, ciphertext, expect, tamper } => {
                let (outcome, error) = runner.decrypt(user, ciphertext, *tamper);
                let tamper = tamper.map(|t| format!(" tamper={t:?}")).unwrap_or_default();
                StepReport {
                    index,
                    action: "decrypt".into(),
                    detail: format!("{user} {ciphertext}{tamper}"),
                    expected: Some(*expect),
                    outcome,
                    error,
                    passed: outcome == *expect,
                }
            }
        };
        steps.push(report);
    }
    let passed = steps.iter().all(|s| s.passed);
    Ok(ScenarioReport { seed, transport, steps, passed })
}

fn simple(index: usize, action: &str, detail: String, r: Result<()>) -> StepReport {
    StepReport {
        index,
        action: action.into(),
        detail,
        expected: None,
        outcome: Outcome::of(&r),
        passed: r.is_ok(),
        error: r.err().map(|e| e.to_string()),
    }
}
