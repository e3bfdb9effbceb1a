//! Model-backed property generation behind a validate and retry loop.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::parse::SvaResources;
use super::property::{SvaProperty, Trace};
use super::template::{generate_property, pick_clock, GenOptions};
use super::validate::{parse_candidates, validate_property};
use super::SvaError;
use crate::analyzer::HoleContext;

pub const GENERATOR_PROMPT: &str = include_str!("../../assets/prompts/generator.txt");
pub const ANALYZER_PROMPT: &str = include_str!("../../assets/prompts/analyzer.txt");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        ChatMessage {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

/// One chat completion round trip.
pub trait ChatBackend {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, SvaError>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub max_retries: u32,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    /// Use the template generator once retries are exhausted.
    pub template_fallback: bool,
    /// Directory with `generator.txt` and `analyzer.txt` overriding the built-in prompts.
    pub prompt_dir: Option<PathBuf>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://localhost:8080/v1/chat/completions".into(),
            model: "default".into(),
            max_retries: 5,
            api_key_env: "COVLOOP_API_KEY".into(),
            temperature: 0.0,
            timeout_secs: 60,
            template_fallback: true,
            prompt_dir: None,
        }
    }
}

impl LlmConfig {
    pub fn from_toml(text: &str) -> Result<Self, SvaError> {
        toml::from_str(text).map_err(|e| SvaError::Config { reason: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, SvaError> {
        let text = std::fs::read_to_string(path).map_err(|e| SvaError::Config {
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::from_toml(&text)
    }

    fn prompts(&self) -> Result<(String, String), SvaError> {
        match &self.prompt_dir {
            None => Ok((GENERATOR_PROMPT.to_string(), ANALYZER_PROMPT.to_string())),
            Some(dir) => {
                let read = |f: &str| {
                    std::fs::read_to_string(dir.join(f)).map_err(|e| SvaError::Config {
                        reason: format!("{}: {e}", dir.join(f).display()),
                    })
                };
                Ok((read("generator.txt")?, read("analyzer.txt")?))
            }
        }
    }
}

/// How properties are produced for a hole.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "UPPERCASE")]
pub enum GenerationBackend {
    #[default]
    Template,
    Llm(LlmConfig),
}

/// JSON-over-HTTP chat completion client.
pub struct HttpChat {
    cfg: LlmConfig,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpChat {
    pub fn new(cfg: LlmConfig) -> Self {
        let key = std::env::var(&cfg.api_key_env).ok();
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .build()
            .new_agent();
        HttpChat { cfg, key, agent }
    }
}

impl ChatBackend for HttpChat {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, SvaError> {
        let unavailable = |reason: String| SvaError::BackendUnavailable { reason };
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": messages,
        });
        let mut req = self.agent.post(&self.cfg.endpoint);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| unavailable(e.to_string()))?;
        let v: Value = resp.body_mut().read_json().map_err(|e| unavailable(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| unavailable("response has no choices[0].message.content".into()))
    }
}

/// A candidate response that failed validation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rejection {
    pub attempt: u32,
    pub response: String,
    pub error: SvaError,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlmOutcome {
    pub properties: Vec<SvaProperty>,
    pub rejected: Vec<Rejection>,
    pub fell_back: bool,
    pub calls: u32,
}

/// Strip code fences and unwrap `{"properties": [...]}` replies.
pub fn extract_sva_text(response: &str) -> String {
    let trimmed = response.trim();
    if let Ok(v) = serde_json::from_str::<Value>(trimmed) {
        let items = v.get("properties").and_then(Value::as_array).cloned().unwrap_or_default();
        let parts: Vec<String> = items
            .iter()
            .filter_map(|i| {
                i.as_str()
                    .or_else(|| i.get("code").and_then(Value::as_str))
                    .or_else(|| i.get("sva").and_then(Value::as_str))
                    .map(str::to_string)
            })
            .collect();
        if !parts.is_empty() {
            return parts.join("\n");
        }
    }
    let mut out = Vec::new();
    let mut fenced = false;
    let mut saw_fence = false;
    for line in trimmed.lines() {
        if line.trim_start().starts_with("```") {
            fenced = !fenced;
            saw_fence = true;
            continue;
        }
        if fenced || !saw_fence {
            out.push(line);
        }
    }
    out.join("\n")
}

fn fill(template: &str, pairs: &[(&str, String)]) -> String {
    let mut s = template.to_string();
    for (k, v) in pairs {
        s = s.replace(&format!("{{{{{k}}}}}"), v);
    }
    s
}

/// Prompt pair sent for a hole.
pub fn build_messages(
    ctx: &HoleContext,
    res: &SvaResources,
    cfg: &LlmConfig,
    critique: Option<&str>,
) -> Result<Vec<ChatMessage>, SvaError> {
    let (system, user) = cfg.prompts()?;
    let list = |v: Vec<String>| if v.is_empty() { "(none)".to_string() } else { v.join(", ") };
    let signals = list(
        res.signals
            .iter()
            .map(|s| match s.width {
                Some(w) if w > 1 => format!("{}[{}:0]", s.name, w - 1),
                _ => s.name.clone(),
            })
            .collect(),
    );
    let macros = list(res.macros.iter().map(|m| format!("`{} = {}", m.name, m.body)).collect());
    let parameters = list(res.parameters.iter().map(|p| format!("{} = {}", p.name, p.value)).collect());
    let existing = list(res.property_names().map(str::to_string).collect());
    let clock = pick_clock(ctx, res).unwrap_or_else(|_| "(none)".into());
    let disable = ctx
        .reset
        .as_ref()
        .filter(|r| !r.asserted_branch)
        .map(|r| r.asserted_text())
        .unwrap_or_else(|| "(none)".into());
    let critique = match critique {
        Some(c) => format!("\nYour previous answer was rejected: {c}\nCorrect it and answer again."),
        None => String::new(),
    };
    let context = serde_json::to_string_pretty(ctx).expect("context serializes");
    let user = fill(
        &user,
        &[
            ("context", context),
            ("signals", signals),
            ("macros", macros),
            ("parameters", parameters),
            ("existing", existing),
            ("clock", clock),
            ("disable", disable),
            ("critique", critique),
        ],
    );
    Ok(vec![ChatMessage::new("system", system), ChatMessage::new("user", user)])
}

fn accept(response: &str, ctx: &HoleContext, res: &SvaResources, opts: &GenOptions) -> Result<Vec<SvaProperty>, SvaError> {
    let text = extract_sva_text(response);
    let mut props = parse_candidates(&text, res)?;
    if props.is_empty() {
        return Err(SvaError::InvalidForm {
            reason: "no property with an assert or cover directive".into(),
        });
    }
    for p in &mut props {
        validate_property(p, res)?;
        if p.behavior.is_empty() {
            p.behavior = ctx.behavior.clone();
        }
        p.trace = Some(Trace {
            file: ctx.file.clone(),
            locations: ctx.locations.iter().map(|l| l.span()).collect(),
            iteration: opts.iteration,
        });
    }
    Ok(props)
}

/// Ask the backend for properties, re-prompting with the rejection reason up
/// to `max_retries` times. Transport failures end the loop immediately.
pub fn llm_generate(
    ctx: &HoleContext,
    res: &SvaResources,
    backend: &mut dyn ChatBackend,
    cfg: &LlmConfig,
    opts: &GenOptions,
) -> Result<LlmOutcome, SvaError> {
    let mut rejected: Vec<Rejection> = Vec::new();
    for attempt in 1..=cfg.max_retries {
        let critique = rejected.last().map(|r| r.error.to_string());
        let messages = build_messages(ctx, res, cfg, critique.as_deref())?;
        let response = backend.complete(&messages)?;
        match accept(&response, ctx, res, opts) {
            Ok(properties) => {
                return Ok(LlmOutcome {
                    properties,
                    rejected,
                    fell_back: false,
                    calls: attempt,
                })
            }
            Err(error) => rejected.push(Rejection {
                attempt,
                response,
                error,
            }),
        }
    }
    if !cfg.template_fallback {
        return Err(SvaError::ValidationExhausted { rejected });
    }
    Ok(LlmOutcome {
        properties: generate_property(ctx, res, opts)?,
        calls: cfg.max_retries,
        rejected,
        fell_back: true,
    })
}
