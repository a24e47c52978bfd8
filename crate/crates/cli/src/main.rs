//! `yle`: command-line client of the Yokai learning environment service.
//!
//! Without `--server` every command starts the service in-process on a
//! loopback port and talks to it over HTTP like any remote client would.

mod config;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use yle_client::Client;
use yle_core::agents::PolicySpec;
use yle_core::harness::diagnostic::load_fixtures;
use yle_core::symmetry::SymmetryMode;
use yle_core::{Encoding, HintTargetIndexing, MemoryMode, Variant};
use yle_service::protocol::*;
use yle_service::ServiceConfig;

use crate::config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "yle", version, about = "Yokai learning environment: benchmark, evaluate, diagnose, export and serve")]
struct Cli {
    /// TOML file presetting any flag; flags override it.
    #[arg(long, global = true, env = "YLE_CONFIG")]
    config: Option<PathBuf>,
    /// Base URL of a running service. Without it the service runs in-process.
    #[arg(long, global = true)]
    server: Option<String>,
    /// Master seed; fixes deals, symmetry draws and policy randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// 3x3 or 4x4.
    #[arg(long, global = true)]
    variant: Option<Variant>,
    /// Number of players, 2 to 4.
    #[arg(long, global = true)]
    players: Option<usize>,
    /// Hint targets addressed by cell or by card.
    #[arg(long, global = true)]
    indexing: Option<HintTargetIndexing>,
    /// Print the raw JSON response instead of a table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure vectorized stepping throughput.
    Bench(BenchArgs),
    /// Play seeded games between seat policies and report metrics.
    Eval(EvalArgs),
    /// Cross-play matrix over a pool of policies.
    Crossplay(CrossPlayArgs),
    /// Rank the labelled moves of the diagnostic scenarios under a policy.
    Diagnose(DiagnoseArgs),
    /// Play games and write the probing dataset as JSON lines.
    Export(ExportArgs),
    /// Run the session service.
    Serve(ServeArgs),
    /// Print the action layout and observation shapes.
    Layout,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Number of parallel environments; repeat or comma-separate for a sweep.
    #[arg(long, value_delimiter = ',')]
    envs: Vec<usize>,
    /// Steps per environment [default: 1000].
    #[arg(long)]
    steps: Option<usize>,
    /// Also build every observation each step.
    #[arg(long)]
    observations: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Policy for seat 0: random, greedy, oracle, external:cmd:... or external:tcp:...
    #[arg(long)]
    seat0: Option<PolicySpec>,
    /// Policy for seat 1.
    #[arg(long)]
    seat1: Option<PolicySpec>,
    /// Policy for seat 2 in three and four player games.
    #[arg(long)]
    seat2: Option<PolicySpec>,
    /// Policy for seat 3 in four player games.
    #[arg(long)]
    seat3: Option<PolicySpec>,
    /// Games to play [default: 100].
    #[arg(long)]
    games: Option<usize>,
    /// Other-play symmetry: none, c or c+r.
    #[arg(long)]
    op: Option<SymmetryMode>,
    /// Memory mode offered to external policies: standard or perfect.
    #[arg(long)]
    memory: Option<MemoryMode>,
    /// Write every episode record to this JSON-lines file.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CrossPlayArgs {
    /// Comma-separated policy specs.
    #[arg(long, value_delimiter = ',')]
    pool: Vec<PolicySpec>,
    /// Games per matrix cell [default: 100].
    #[arg(long)]
    games: Option<usize>,
    /// Other-play symmetry: none, c or c+r.
    #[arg(long)]
    op: Option<SymmetryMode>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// Policy to rank the labelled moves with.
    #[arg(long)]
    policy: Option<PolicySpec>,
    /// Scenario file; the built-in fixture family when absent.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Games to play [default: 100].
    #[arg(long)]
    games: Option<usize>,
    /// Output JSON-lines file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Policy for seat 0 [default: oracle].
    #[arg(long)]
    seat0: Option<PolicySpec>,
    /// Policy for seat 1 [default: oracle].
    #[arg(long)]
    seat1: Option<PolicySpec>,
    /// Embed each agent's observation: graph or image.
    #[arg(long)]
    embed: Option<Encoding>,
    /// Memory mode of embedded observations: standard or perfect.
    #[arg(long)]
    memory: Option<MemoryMode>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Address to bind [default: 127.0.0.1:8080].
    #[arg(long)]
    listen: Option<String>,
    /// Default binding of seat 0 ("human" or a policy spec).
    #[arg(long)]
    seat0: Option<SeatBinding>,
    /// Default binding of seat 1.
    #[arg(long)]
    seat1: Option<SeatBinding>,
    /// Append finished games to <dir>/sessions.jsonl.
    #[arg(long)]
    journal_dir: Option<PathBuf>,
    /// Accept external policies, which run commands or open connections on this host.
    #[arg(long)]
    allow_external: bool,
}

/// A bad flag or configuration value; exits with status 2 like clap does.
#[derive(Debug)]
struct Usage(String);

impl Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// The flag if given, else the file value parsed, else `None`.
fn merge<T: FromStr>(flag: Option<T>, file: Option<&String>, key: &str) -> anyhow::Result<Option<T>>
where
    T::Err: Display,
{
    match (flag, file) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(s)) => s.parse().map(Some).map_err(|e| Usage(format!("config key {key}: {e}")).into()),
        (None, None) => Ok(None),
    }
}

fn required<T>(value: Option<T>, what: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| Usage(format!("missing {what}")).into())
}

struct Setup {
    cli: Cli,
    file: FileConfig,
}

impl Setup {
    fn seed(&self) -> u64 {
        self.cli.seed.or(self.file.seed).unwrap_or(0)
    }

    fn game(&self) -> anyhow::Result<GameSpec> {
        let variant = merge(self.cli.variant, self.file.variant.as_ref(), "variant")?.unwrap_or(Variant::ThreeByThree);
        let players = self.cli.players.or(self.file.players).unwrap_or(2);
        let spec = GameSpec { variant, players, hint_target_indexing: self.cli.indexing.unwrap_or_default() };
        spec.config().map_err(|e| Usage(e.to_string()))?;
        Ok(spec)
    }
}

fn print_result<T: serde::Serialize>(json: bool, value: &T, table: &str) -> anyhow::Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{table}");
    }
    Ok(())
}

async fn connect(ctx: &Setup) -> anyhow::Result<Client> {
    if let Some(url) = ctx.cli.server.clone().or(ctx.file.server.clone()) {
        return Ok(Client::new(url));
    }
    let config = ServiceConfig { allow_external_policies: true, ..ServiceConfig::default() };
    let (addr, _) = yle_service::spawn_local(config).await.context("starting the in-process service")?;
    Ok(Client::new(format!("http://{addr}")))
}

async fn bench(ctx: &Setup, args: &BenchArgs) -> anyhow::Result<()> {
    let f = &ctx.file.bench;
    let envs = if args.envs.is_empty() { f.envs.clone().unwrap_or_else(|| vec![512]) } else { args.envs.clone() };
    let request = BenchRequest {
        game: ctx.game()?,
        envs,
        steps: args.steps.or(f.steps).unwrap_or(1000),
        seed: ctx.seed(),
        observations: args.observations || f.observations.unwrap_or(false),
    };
    let reply = connect(ctx).await?.bench(&request).await?;
    print_result(ctx.cli.json, &reply, &reply.table)
}

async fn eval(ctx: &Setup, args: &EvalArgs) -> anyhow::Result<()> {
    let f = &ctx.file.eval;
    let game = ctx.game()?;
    let flags = [&args.seat0, &args.seat1, &args.seat2, &args.seat3];
    let keys = [&f.seat0, &f.seat1, &f.seat2, &f.seat3];
    let mut seats = Vec::with_capacity(game.players);
    for seat in 0..game.players {
        let spec = merge(flags[seat].clone(), keys[seat].as_ref(), &format!("eval.seat{seat}"))?;
        seats.push(required(spec, &format!("--seat{seat}"))?);
    }
    let records = args.records.clone().or(f.records.as_ref().map(PathBuf::from));
    let request = EvalRequest {
        game,
        seats,
        games: args.games.or(f.games).unwrap_or(100),
        seed: ctx.seed(),
        symmetry: merge(args.op, f.op.as_ref(), "eval.op")?.unwrap_or_default(),
        memory: merge(args.memory, f.memory.as_ref(), "eval.memory")?.unwrap_or_default(),
        record: records.is_some(),
    };
    let reply = connect(ctx).await?.eval(&request).await?;
    if let Some(path) = records {
        let text: String = reply.result.records.iter().map(|r| r.to_json_line() + "\n").collect();
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut table = reply.table.clone();
    for a in &reply.result.aborted {
        table.push_str(&format!("aborted episode {} at step {} (seat {}): {}\n", a.episode, a.step, a.seat, a.reason));
    }
    print_result(ctx.cli.json, &reply, &table)
}

async fn crossplay(ctx: &Setup, args: &CrossPlayArgs) -> anyhow::Result<()> {
    let f = &ctx.file.crossplay;
    let pool = if args.pool.is_empty() {
        f.pool
            .iter()
            .flatten()
            .map(|s| s.parse().map_err(|e| Usage(format!("config key crossplay.pool: {e}"))))
            .collect::<Result<Vec<PolicySpec>, _>>()?
    } else {
        args.pool.clone()
    };
    if pool.len() < 2 {
        bail!(Usage("--pool needs at least two policies".into()));
    }
    let request = CrossPlayRequest {
        game: ctx.game()?,
        pool,
        games: args.games.or(f.games).unwrap_or(100),
        seed: ctx.seed(),
        symmetry: merge(args.op, f.op.as_ref(), "crossplay.op")?.unwrap_or_default(),
    };
    let reply = connect(ctx).await?.crossplay(&request).await?;
    print_result(ctx.cli.json, &reply, &reply.table)
}

async fn diagnose(ctx: &Setup, args: &DiagnoseArgs) -> anyhow::Result<()> {
    let f = &ctx.file.diagnose;
    let policy = required(merge(args.policy.clone(), f.policy.as_ref(), "diagnose.policy")?, "--policy")?;
    let scenarios = match args.fixtures.clone().or(f.fixtures.as_ref().map(PathBuf::from)) {
        Some(path) => Some(load_fixtures(&path).with_context(|| format!("loading {}", path.display()))?),
        None => None,
    };
    let request = DiagnoseRequest { policy, scenarios, seed: ctx.seed() };
    let reply = connect(ctx).await?.diagnose(&request).await?;
    let mut table = reply.table.clone();
    for s in &reply.report.scenarios {
        table.push_str(&format!(
            "  {:<24} legal {:>4}  T0 {:>7.2}  T1 {:>7.2}  Wrong {:>7.2}\n",
            s.name, s.legal, s.ranks.t0, s.ranks.t1, s.ranks.wrong
        ));
    }
    print_result(ctx.cli.json, &reply, &table)
}

async fn export(ctx: &Setup, args: &ExportArgs) -> anyhow::Result<()> {
    let f = &ctx.file.export;
    let out = required(args.out.clone().or(f.out.as_ref().map(PathBuf::from)), "--out")?;
    let seat0 = merge(args.seat0.clone(), f.seat0.as_ref(), "export.seat0")?.unwrap_or(PolicySpec::Oracle);
    let seat1 = merge(args.seat1.clone(), f.seat1.as_ref(), "export.seat1")?.unwrap_or(PolicySpec::Oracle);
    let game = ctx.game()?;
    let mut seats = vec![seat0, seat1];
    seats.resize(game.players, seats[1].clone());
    let embed = merge(args.embed, f.embed.as_ref(), "export.embed")?;
    let memory = merge(args.memory, f.memory.as_ref(), "export.memory")?.unwrap_or_default();
    let request = ExportRequest {
        game,
        seats,
        games: args.games.or(f.games).unwrap_or(100),
        seed: ctx.seed(),
        symmetry: SymmetryMode::None,
        embed: embed.map(|e| (e, memory)),
    };
    let rows = connect(ctx).await?.export(&request).await?;
    std::fs::write(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
    let count = rows.lines().count();
    if ctx.cli.json {
        println!("{}", serde_json::json!({ "rows": count, "out": out }));
    } else {
        println!("wrote {count} probing rows from {} games to {}", request.games, out.display());
    }
    Ok(())
}

async fn layout(ctx: &Setup) -> anyhow::Result<()> {
    let game = ctx.game()?;
    let info = connect(ctx).await?.layout(game.variant, game.players, game.hint_target_indexing).await?;
    let l = &info.layout;
    let table = format!(
        "variant {} players {}\naction count {} (observe @{}, move @{}, reveal @{}, place @{}, no-op @{})\n\
         max episode length {}\ngraph observation {:?}\nimage observation {:?}\n",
        info.config.variant,
        info.config.num_players,
        info.action_count,
        l.observe_offset,
        l.move_offset,
        l.reveal_offset,
        l.place_offset,
        l.noop_index,
        info.max_episode_length,
        info.graph_shape,
        info.image_shape
    );
    print_result(ctx.cli.json, &info, &table)
}

async fn serve(ctx: &Setup, args: &ServeArgs) -> anyhow::Result<()> {
    let f = &ctx.file.serve;
    let listen = args.listen.clone().or(f.listen.clone()).unwrap_or_else(|| "127.0.0.1:8080".into());
    let mut config = ServiceConfig::default();
    if let Some(b) = merge(args.seat0.clone(), f.seat0.as_ref(), "serve.seat0")? {
        config.default_seats[0] = b;
    }
    if let Some(b) = merge(args.seat1.clone(), f.seat1.as_ref(), "serve.seat1")? {
        config.default_seats[1] = b;
    }
    config.journal_dir = args.journal_dir.clone().or(f.journal_dir.as_ref().map(PathBuf::from));
    config.allow_external_policies = args.allow_external || f.allow_external.unwrap_or(false);
    let listener = tokio::net::TcpListener::bind(&listen).await.with_context(|| format!("binding {listen}"))?;
    println!("listening on http://{} ({SERVICE_VERSION})", listener.local_addr()?);
    yle_service::serve(listener, config).await?;
    Ok(())
}

async fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => config::load(path).map_err(|e| Usage(e.to_string()))?,
        None => FileConfig::default(),
    };
    let ctx = Setup { cli, file };
    match &ctx.cli.command {
        Command::Bench(a) => bench(&ctx, a).await,
        Command::Eval(a) => eval(&ctx, a).await,
        Command::Crossplay(a) => crossplay(&ctx, a).await,
        Command::Diagnose(a) => diagnose(&ctx, a).await,
        Command::Export(a) => export(&ctx, a).await,
        Command::Serve(a) => serve(&ctx, a).await,
        Command::Layout => layout(&ctx).await,
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt().with_env_filter(tracing_subscriber::EnvFilter::from_default_env()).with_writer(std::io::stderr).init();
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
