use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "medlat", version, about = "Annotation pipeline for Medieval Latin CoNLL-U corpora")]
pub struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true, env = "MEDLAT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Tab-separated output with a versioned header line.
    #[arg(long, global = true)]
    pub machine: bool,
    /// Directory for every file the command writes.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for scenario runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus statistics and validation.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Rewrite a column with orthographic normalization rules.
    Normalize(NormalizeArgs),
    /// Part-of-speech and morphological feature tagging.
    #[command(subcommand)]
    Tagger(TaggerCmd),
    /// Lemmatization from form and UPOS.
    #[command(subcommand)]
    Lemmatize(LemmatizeCmd),
    /// Plan, run and compare training scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Token accuracy of predictions against gold annotation.
    Eval(EvalArgs),
    /// Error analysis of predictions against gold annotation.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCmd {
    /// Token and sentence counts of registry datasets or files.
    Stats(StatsArgs),
    /// Check declared statistics and CoNLL-U well-formedness.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Registry file; defaults to the configured or built-in reference registry.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Restrict to these datasets.
    #[arg(long = "dataset")]
    pub datasets: Vec<String>,
    /// CoNLL-U files to count instead of registry datasets.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Largest accepted |declared avg - tokens/sentences|.
    #[arg(long, default_value_t = medlat_core::registry::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Exit with an error when anything is flagged.
    #[arg(long)]
    pub strict: bool,
    /// CoNLL-U files to check instead of the registry.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TextField {
    Lemma,
    Form,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Ruleset file; defaults to the configured ruleset, then the built-in one.
    #[arg(long)]
    pub ruleset: Option<PathBuf>,
    #[arg(long = "in", required_unless_present = "words")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TextField::Lemma)]
    pub field: TextField,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Normalize these words and print them instead of reading a file.
    #[arg(long = "word", conflicts_with = "input")]
    pub words: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Upos,
    Ufeats,
}

#[derive(Debug, Subcommand)]
pub enum TaggerCmd {
    Train(TaggerTrainArgs),
    Tag(TaggerTagArgs),
    Eval(TaggerEvalArgs),
}

#[derive(Debug, Args)]
pub struct TaggerTrainArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Training CoNLL-U files.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Continue training this model.
    #[arg(long)]
    pub base: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TaggerTagArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TaggerEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum LemmatizeCmd {
    Train(LemmaTrainArgs),
    /// Lemmatize `form:UPOS` lines (stdin or --input) or a CoNLL-U file.
    Run(LemmaRunArgs),
}

#[derive(Debug, Args)]
pub struct LemmaTrainArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub base: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LemmaRunArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// File of `form:UPOS` lines; stdin when absent.
    #[arg(long, conflicts_with = "conllu")]
    pub input: Option<PathBuf>,
    /// Fill the lemma column of this file using its UPOS column.
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    #[arg(long, requires = "conllu")]
    pub output: Option<PathBuf>,
    /// Post-correct predicted lemmas with this ruleset.
    #[arg(long)]
    pub ruleset: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCmd {
    Plan(PlanArgs),
    Run(RunArgs),
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Scenario file (TOML); flags override its values.
    #[arg(long)]
    pub scenario_config: Option<PathBuf>,
    /// baseline, ud_all, ud_plus_specific[=UD], ud_plus_efontes,
    /// ud_specific_plus_efontes[=UD]. Repeatable; defaults to the first four.
    #[arg(long = "scenario")]
    pub scenarios: Vec<String>,
    /// Comma-separated subset of upos,ufeats,lemma.
    #[arg(long)]
    pub tasks: Option<String>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Permit ud_specific_plus_efontes.
    #[arg(long)]
    pub allow_extended: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hold out this fraction of each cross-validation training set.
    #[arg(long)]
    pub validation_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Results file; defaults to results.tsv in the output directory.
    #[arg(long, conflicts_with = "reference")]
    pub results: Option<PathBuf>,
    /// Compare the bundled published results.
    #[arg(long)]
    pub reference: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value = "upos,ufeats,lemma")]
    pub fields: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Report {
    /// Positional lemma confusion patterns.
    Confusions,
    /// Gold vs predicted UPOS confusions.
    Pos,
    /// Error share per genre.
    Genres,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, required_unless_present = "genre_pairs")]
    pub gold: Option<PathBuf>,
    #[arg(long, required_unless_present = "genre_pairs")]
    pub pred: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Report::Confusions)]
    pub report: Report,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    /// Keep tokens whose gold UPOS is SYM.
    #[arg(long)]
    pub include_sym: bool,
    /// NAME=GOLD,PRED; repeatable, for the genres report.
    #[arg(long = "genre-pair")]
    pub genre_pairs: Vec<String>,
    /// Field counted by the genres report.
    #[arg(long, default_value = "lemma")]
    pub field: String,
    /// Also write lexicon-gated correction rules mined from the errors.
    #[arg(long)]
    pub emit_rules: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
}
