//! The cloud server: key list, ciphertext store and outsourced decryption.
//!
//! On disk (when a data directory is given):
//!
//! * `kt.log`: append-only records `len: u32 ∥ seq: u64 ∥ op: u8 ∥ body ∥
//!   sha256(seq ∥ op ∥ body)`; `len` covers everything after itself.
//! * `kt.snapshot`: `magic ∥ seq: u64 ∥ key list ∥ sha256`, replaced by
//!   write-to-temp and rename. Log records at or below `seq` are already in it.
//! * `ct/<hex id>`: one canonical ciphertext per file, also written via a
//!   temporary file and rename.
//!
//! A key-list mutation commits when its log record is complete; a ciphertext
//! commits when its file is renamed into place. Recovery drops a torn log
//! tail and leftover temporary files.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Mutex, RwLock};

use sha2::{Digest, Sha256};

use super::transport::Service;
use super::tmp_path;
use super::wire::{CtId, Request, Response};
use crate::codec::{Decode, Encode, Reader, Writer};
use crate::error::{Error, Result};
use crate::ids::{Attribute, Gid, HiddenLabel};
use crate::scheme::{cs_dec, Ciphertext, CloudUserKey, GlobalParams, KeyList, PartialCiphertext, UserPublicKey};

const SNAPSHOT_MAGIC: &[u8; 8] = b"VFACKT01";
const LOG: &str = "kt.log";
const SNAPSHOT: &str = "kt.snapshot";
const CT_DIR: &str = "ct";

const OP_REGISTER: u8 = 1;
const OP_REVOKE: u8 = 2;

/// Places where a write can be interrupted, in the order they occur.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CommitPoint {
    /// Part of a log record has been written.
    LogPartial,
    /// The log record is complete but not yet applied in memory.
    LogWritten,
    /// A new snapshot is in its temporary file.
    SnapshotTemp,
    /// The new snapshot is in place but the log has not been reset.
    SnapshotRenamed,
    /// Part of a ciphertext's temporary file has been written.
    CtPartial,
    /// The ciphertext's temporary file is complete but not renamed.
    CtTemp,
    /// The ciphertext file is in place but not yet indexed in memory.
    CtRenamed,
}

impl CommitPoint {
    pub const ALL: [CommitPoint; 7] = [
        CommitPoint::LogPartial,
        CommitPoint::LogWritten,
        CommitPoint::SnapshotTemp,
        CommitPoint::SnapshotRenamed,
        CommitPoint::CtPartial,
        CommitPoint::CtTemp,
        CommitPoint::CtRenamed,
    ];
}

#[derive(Clone, Copy, Debug)]
pub struct CloudConfig {
    /// Write a snapshot (and reset the log) after this many log records.
    pub snapshot_every: u64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        CloudConfig { snapshot_every: 64 }
    }
}

/// Everything the server persists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CloudState {
    pub kt: KeyList,
    pub cts: BTreeMap<CtId, Ciphertext>,
}

/// `ct_id`: the `H2` digest of the canonical ciphertext bytes.
pub fn ciphertext_id(gp: &GlobalParams, ct_bytes: &[u8]) -> CtId {
    gp.hashes().digest(&[b"ct", ct_bytes])
}

struct Store {
    dir: PathBuf,
    log: File,
    next_seq: u64,
    since_snapshot: u64,
}

struct Inner {
    state: CloudState,
    store: Option<Store>,
}

pub struct CloudServer {
    gp: GlobalParams,
    inner: RwLock<Inner>,
    config: CloudConfig,
    fault: Mutex<Option<CommitPoint>>,
    crashed: AtomicBool,
}

#[allow(clippy::large_enum_variant)]
enum Op {
    Register { gid: Gid, upk: UserPublicKey, csk: CloudUserKey },
    Revoke { gid: Gid },
}

impl Op {
    fn code(&self) -> u8 {
        match self {
            Op::Register { .. } => OP_REGISTER,
            Op::Revoke { .. } => OP_REVOKE,
        }
    }

    fn body(&self) -> Vec<u8> {
        let mut w = Writer::new();
        match self {
            Op::Register { gid, upk, csk } => w.put(gid).put(upk).put(csk),
            Op::Revoke { gid } => w.put(gid),
        };
        w.into_bytes()
    }

    fn parse(code: u8, body: &[u8]) -> Result<Op> {
        let mut r = Reader::new(body);
        let op = match code {
            OP_REGISTER => Op::Register { gid: r.get()?, upk: r.get()?, csk: r.get()? },
            OP_REVOKE => Op::Revoke { gid: r.get()? },
            c => return Err(Error::Decode(format!("unknown log op {c}"))),
        };
        r.finish()?;
        Ok(op)
    }

    fn apply(&self, kt: &mut KeyList) -> Result<()> {
        match self {
            Op::Register { gid, upk, csk } => kt.register(gid, upk, std::slice::from_ref(csk)),
            Op::Revoke { gid } => {
                kt.revoke(gid);
                Ok(())
            }
        }
    }
}

fn record_checksum(seq: u64, op: u8, body: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seq.to_be_bytes());
    h.update([op]);
    h.update(body);
    h.finalize().into()
}

fn encode_record(seq: u64, op: &Op) -> Vec<u8> {
    let body = op.body();
    let mut out = Vec::with_capacity(body.len() + 45);
    out.extend_from_slice(&((8 + 1 + body.len() + 32) as u32).to_be_bytes());
    out.extend_from_slice(&seq.to_be_bytes());
    out.push(op.code());
    out.extend_from_slice(&body);
    out.extend_from_slice(&record_checksum(seq, op.code(), &body));
    out
}

/// Parses log records. Returns them with the byte length of the valid
/// prefix; anything after it is a torn or corrupt tail.
fn parse_log(bytes: &[u8]) -> (Vec<(u64, Op)>, usize) {
    let mut records = Vec::new();
    let mut pos = 0;
    while bytes.len() - pos >= 4 {
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().expect("4 bytes")) as usize;
        let end = pos + 4 + len;
        if len < 41 || end > bytes.len() {
            break;
        }
        let rec = &bytes[pos + 4..end];
        let seq = u64::from_be_bytes(rec[..8].try_into().expect("8 bytes"));
        let code = rec[8];
        let body = &rec[9..len - 32];
        if rec[len - 32..] != record_checksum(seq, code, body) {
            break;
        }
        let Ok(op) = Op::parse(code, body) else { break };
        records.push((seq, op));
        pos = end;
    }
    (records, pos)
}

fn encode_snapshot(seq: u64, kt: &KeyList) -> Vec<u8> {
    let mut out = SNAPSHOT_MAGIC.to_vec();
    out.extend_from_slice(&seq.to_be_bytes());
    out.extend_from_slice(&kt.to_bytes());
    let sum: [u8; 32] = Sha256::digest(&out).into();
    out.extend_from_slice(&sum);
    out
}

fn decode_snapshot(bytes: &[u8]) -> Result<(u64, KeyList)> {
    if bytes.len() < 48 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(Error::Decode("not a key list snapshot".into()));
    }
    let (content, sum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(content)[..] != sum[..] {
        return Err(Error::Decode("snapshot checksum mismatch".into()));
    }
    let seq = u64::from_be_bytes(content[8..16].try_into().expect("8 bytes"));
    Ok((seq, KeyList::from_bytes(&content[16..])?))
}

fn sync_dir(dir: &Path) {
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

/// Reads the persisted state. With `repair`, also truncates a torn log tail
/// and deletes temporary files; without it, touches nothing.
fn load(gp: &GlobalParams, dir: &Path, repair: bool) -> Result<(CloudState, u64, u64)> {
    let snap_path = dir.join(SNAPSHOT);
    let (snap_seq, mut kt) = match fs::read(&snap_path) {
        Ok(bytes) => decode_snapshot(&bytes)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => (0, KeyList::new()),
        Err(e) => return Err(e.into()),
    };
    let log_path = dir.join(LOG);
    let log_bytes = match fs::read(&log_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let (records, valid) = parse_log(&log_bytes);
    if valid != log_bytes.len() {
        log::warn!("kt.log: dropping {} bytes of torn tail", log_bytes.len() - valid);
        if repair {
            OpenOptions::new().write(true).open(&log_path)?.set_len(valid as u64)?;
        }
    }
    let mut last = snap_seq;
    let mut pending = 0;
    for (seq, op) in records {
        if seq <= snap_seq {
            continue;
        }
        if seq != last + 1 {
            return Err(Error::Decode(format!("kt.log: sequence gap at {seq} after {last}")));
        }
        op.apply(&mut kt)?;
        last = seq;
        pending += 1;
    }

    let ct_dir = dir.join(CT_DIR);
    let mut cts = BTreeMap::new();
    if ct_dir.exists() {
        for entry in fs::read_dir(&ct_dir)? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            if name.ends_with(super::TMP_SUFFIX) {
                if repair {
                    fs::remove_file(&path)?;
                }
                continue;
            }
            let id: CtId = hex::decode(&name)
                .ok()
                .and_then(|b| b.try_into().ok())
                .ok_or_else(|| Error::Decode(format!("unexpected file ct/{name}")))?;
            let bytes = fs::read(&path)?;
            if ciphertext_id(gp, &bytes) != id {
                return Err(Error::Decode(format!("ct/{name} does not match its id")));
            }
            cts.insert(id, Ciphertext::from_bytes(&bytes)?);
        }
    }
    if repair {
        let _ = fs::remove_file(tmp_path(&snap_path));
    }
    Ok((CloudState { kt, cts }, last + 1, pending))
}

/// Recovers the state in `dir` without modifying it and checks it for
/// internal consistency: complete log records in sequence, ciphertext files
/// matching their ids, and well-formed user keys.
pub fn validate_dir(gp: &GlobalParams, dir: &Path) -> Result<CloudState> {
    let (state, _, _) = load(gp, dir, false)?;
    for gid in state.kt.gids() {
        let entry = state.kt.get(gid).expect("listed gid");
        if !entry.upk.is_well_formed(gp, gid)? {
            return Err(Error::InvalidKey(format!("stored key for {gid} is malformed")));
        }
    }
    Ok(state)
}

impl CloudServer {
    /// A server that keeps everything in memory.
    pub fn in_memory(gp: GlobalParams) -> CloudServer {
        CloudServer {
            gp,
            inner: RwLock::new(Inner { state: CloudState::default(), store: None }),
            config: CloudConfig::default(),
            fault: Mutex::new(None),
            crashed: AtomicBool::new(false),
        }
    }

    /// Opens (or creates) a persistent server in `dir`, recovering whatever
    /// was committed there.
    pub fn open(gp: GlobalParams, dir: &Path, config: CloudConfig) -> Result<CloudServer> {
        fs::create_dir_all(dir.join(CT_DIR))?;
        let (state, next_seq, pending) = load(&gp, dir, true)?;
        let log = OpenOptions::new().create(true).append(true).open(dir.join(LOG))?;
        let store = Store { dir: dir.to_path_buf(), log, next_seq, since_snapshot: pending };
        Ok(CloudServer {
            gp,
            inner: RwLock::new(Inner { state, store: Some(store) }),
            config,
            fault: Mutex::new(None),
            crashed: AtomicBool::new(false),
        })
    }

    pub fn params(&self) -> &GlobalParams {
        &self.gp
    }

    /// Arms a one-shot simulated crash at `point`. After it fires the server
    /// refuses all requests; reopen the directory to recover.
    pub fn inject_fault(&self, point: CommitPoint) {
        *self.fault.lock().expect("fault lock poisoned") = Some(point);
    }

    pub fn is_crashed(&self) -> bool {
        self.crashed.load(Ordering::SeqCst)
    }

    fn checkpoint(&self, point: CommitPoint) -> Result<()> {
        let mut fault = self.fault.lock().expect("fault lock poisoned");
        if *fault == Some(point) {
            *fault = None;
            self.crashed.store(true, Ordering::SeqCst);
            return Err(Error::Other(format!("injected crash at {point:?}")));
        }
        Ok(())
    }

    fn alive(&self) -> Result<()> {
        if self.is_crashed() {
            return Err(Error::Unavailable("cloud server crashed".into()));
        }
        Ok(())
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().expect("state lock poisoned")
    }

    /// A copy of the in-memory state.
    pub fn state(&self) -> CloudState {
        self.read().state.clone()
    }

    pub fn key_list(&self) -> KeyList {
        self.read().state.kt.clone()
    }

    pub fn store_ct(&self, ct: &Ciphertext) -> Result<CtId> {
        self.alive()?;
        let bytes = ct.to_bytes();
        let id = ciphertext_id(&self.gp, &bytes);
        let mut inner = self.inner.write().expect("state lock poisoned");
        if inner.state.cts.contains_key(&id) {
            return Ok(id);
        }
        if let Some(store) = &inner.store {
            let path = store.dir.join(CT_DIR).join(hex::encode(id));
            let tmp = tmp_path(&path);
            let mut f = File::create(&tmp)?;
            let half = bytes.len() / 2;
            f.write_all(&bytes[..half])?;
            self.checkpoint(CommitPoint::CtPartial)?;
            f.write_all(&bytes[half..])?;
            f.sync_all()?;
            drop(f);
            self.checkpoint(CommitPoint::CtTemp)?;
            fs::rename(&tmp, &path)?;
            sync_dir(path.parent().expect("ct dir"));
            self.checkpoint(CommitPoint::CtRenamed)?;
        }
        inner.state.cts.insert(id, ct.clone());
        Ok(id)
    }

    pub fn fetch_ct(&self, id: &CtId) -> Result<Ciphertext> {
        self.alive()?;
        self.read()
            .state
            .cts
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("ciphertext {}", hex::encode(id))))
    }

    pub fn request_dec(
        &self,
        gid: &Gid,
        id: &CtId,
        labels: &BTreeMap<Attribute, HiddenLabel>,
    ) -> Result<PartialCiphertext> {
        self.alive()?;
        let inner = self.read();
        let ct = inner
            .state
            .cts
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("ciphertext {}", hex::encode(id))))?;
        cs_dec(&self.gp, &inner.state.kt, gid, ct, labels)
    }

    /// Registers cloud key parts for `gid`. Parts identical to ones already
    /// stored are skipped, so replays are harmless; returns whether anything
    /// changed.
    pub fn register_key(&self, gid: &Gid, upk: &UserPublicKey, csk: &CloudUserKey) -> Result<bool> {
        self.alive()?;
        let mut inner = self.inner.write().expect("state lock poisoned");
        let existing = inner.state.kt.get(gid);
        let fresh = CloudUserKey {
            entries: csk
                .entries
                .iter()
                .filter(|(a, k)| {
                    !existing.is_some_and(|e| e.upk == *upk && e.csk.entries.get(*a) == Some(*k))
                })
                .map(|(a, k)| (a.clone(), k.clone()))
                .collect(),
        };
        if existing.is_some_and(|e| e.upk == *upk) && fresh.entries.is_empty() {
            return Ok(false);
        }
        inner.state.kt.prepare_register(gid, upk, std::slice::from_ref(&fresh))?;
        let op = Op::Register { gid: gid.clone(), upk: upk.clone(), csk: fresh };
        self.commit(&mut inner, op)?;
        Ok(true)
    }

    /// Removes `gid` from the key list. Returns whether it was present.
    pub fn revoke(&self, gid: &Gid) -> Result<bool> {
        self.alive()?;
        let mut inner = self.inner.write().expect("state lock poisoned");
        if inner.state.kt.get(gid).is_none() {
            log::info!("revoke: {gid} not in key list");
            return Ok(false);
        }
        self.commit(&mut inner, Op::Revoke { gid: gid.clone() })?;
        Ok(true)
    }

    fn commit(&self, inner: &mut Inner, op: Op) -> Result<()> {
        let Inner { state, store } = inner;
        if let Some(store) = store {
            let record = encode_record(store.next_seq, &op);
            let half = record.len() / 2;
            store.log.write_all(&record[..half])?;
            store.log.flush()?;
            self.checkpoint(CommitPoint::LogPartial)?;
            store.log.write_all(&record[half..])?;
            store.log.sync_data()?;
            self.checkpoint(CommitPoint::LogWritten)?;
            store.next_seq += 1;
            store.since_snapshot += 1;
        }
        op.apply(&mut state.kt).expect("validated before logging");
        if let Some(store) = store {
            if store.since_snapshot >= self.config.snapshot_every {
                self.snapshot(store, &state.kt)?;
            }
        }
        Ok(())
    }

    fn snapshot(&self, store: &mut Store, kt: &KeyList) -> Result<()> {
        let path = store.dir.join(SNAPSHOT);
        let tmp = tmp_path(&path);
        let mut f = File::create(&tmp)?;
        f.write_all(&encode_snapshot(store.next_seq - 1, kt))?;
        f.sync_all()?;
        drop(f);
        self.checkpoint(CommitPoint::SnapshotTemp)?;
        fs::rename(&tmp, &path)?;
        sync_dir(&store.dir);
        self.checkpoint(CommitPoint::SnapshotRenamed)?;
        store.log.set_len(0)?;
        store.log.sync_data()?;
        store.since_snapshot = 0;
        Ok(())
    }
}

impl Service for CloudServer {
    fn handle(&self, req: Request) -> Response {
        let result = match req {
            Request::StoreCt { ct } => self.store_ct(&ct).map(Response::Stored),
            Request::RequestDec { gid, ct_id, labels } => {
                self.request_dec(&gid, &ct_id, &labels).map(Response::Partial)
            }
            Request::Revoke { gid } => self.revoke(&gid).map(|changed| Response::Ack { changed }),
            Request::RegisterKey { gid, upk, csk } => {
                self.register_key(&gid, &upk, &csk).map(|changed| Response::Ack { changed })
            }
            Request::FetchH { ct_id } => self.fetch_ct(&ct_id).map(|ct| Response::H(ct.h)),
            Request::FetchCt { ct_id } => self.fetch_ct(&ct_id).map(Response::Ct),
            other => Err(Error::Protocol(format!("the cloud server does not serve kind {:#04x}", other.kind()))),
        };
        result.unwrap_or_else(|e| Response::from_error(&e))
    }
}
