//! The `fnv` command line.
//!
//! Exit codes: 0 when no error diagnostics were produced, 1 when some were,
//! 2 for usage errors, unreadable files, syntax errors and unknown names.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::diagnostics::Diagnostic;
use crate::dot::{export_dot, render_dot};
use crate::dsl::{parse, print_view};
use crate::features::{count_configurations, enumerate_configurations, validate_diagram};
use crate::model::{Ident, Model};
use crate::net_check::check_net;
use crate::report::{render_report, Format, Report};
use crate::variants::{validate_binding, Deriver, VariantError, VariantView};
use crate::view::{check_view, CheckError};

#[derive(Debug, Parser)]
#[command(
    name = "fnv",
    version,
    about = "Check function nets, views and feature variants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check nets and views; without --net/--view everything in the file.
    Check {
        file: PathBuf,
        #[arg(long)]
        net: Option<String>,
        #[arg(long)]
        view: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// List or count the valid configurations of a feature diagram.
    Configs {
        file: PathBuf,
        #[arg(long)]
        features: String,
        #[arg(long)]
        count: bool,
    },
    /// Derive variant views from a feature-to-view binding.
    Derive {
        file: PathBuf,
        #[arg(long)]
        binding: String,
        /// Comma-separated selected features; derives every configuration if absent.
        #[arg(long, value_delimiter = ',')]
        config: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Emit::Dot)]
        emit: Emit,
    },
    /// Export a net, view or variant as a Graphviz digraph.
    ExportDot {
        file: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Dot,
    Fnv,
    Both,
}

/// Fatal problem reported on stderr with exit code 2.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

/// Runs `fnv` with `args` (without the program name).
pub fn run_cli<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv =
        std::iter::once(std::ffi::OsString::from("fnv")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Usage> {
    match command {
        Command::Check {
            file,
            net,
            view,
            format,
        } => {
            let model = load(&file)?;
            let (subject, diags) = check(&model, &file, net.as_deref(), view.as_deref())?;
            let report = Report::new(subject, diags);
            out.write_all(render_report(&report, format).as_bytes())?;
            Ok(i32::from(report.has_errors()))
        }
        Command::Configs {
            file,
            features,
            count,
        } => {
            let model = load(&file)?;
            let fd = model
                .feature_diagram(&features)
                .ok_or_else(|| Usage(format!("unknown feature diagram `{features}`")))?;
            let diags = validate_diagram(fd);
            if crate::diagnostics::has_errors(&diags) {
                let report = Report::new(features, diags);
                out.write_all(render_report(&report, Format::Text).as_bytes())?;
                return Ok(1);
            }
            if count {
                writeln!(out, "{}", count_configurations(fd))?;
            } else {
                for c in enumerate_configurations(fd) {
                    let names: Vec<&str> = c.selected.iter().map(Ident::as_str).collect();
                    writeln!(out, "{}: {}", c.variant_id, names.join(", "))?;
                }
            }
            Ok(0)
        }
        Command::Derive {
            file,
            binding,
            config,
            out: dir,
            emit,
        } => {
            let model = load(&file)?;
            derive(&model, &binding, config, dir.as_deref(), emit, out)
        }
        Command::ExportDot {
            file,
            target,
            output,
        } => {
            let model = load(&file)?;
            let dot = export_dot(&model, &target)?;
            match output {
                Some(path) => std::fs::write(&path, dot)
                    .map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?,
                None => out.write_all(dot.as_bytes())?,
            }
            Ok(0)
        }
    }
}

fn load(path: &Path) -> Result<Model, Usage> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|diags| {
        Usage(
            diags
                .iter()
                .map(|d| format!("{}:{}", path.display(), d))
                .collect::<Vec<_>>()
                .join("\n"),
        )
    })
}

/// Collects findings, checking each net at most once.
struct Checker<'m> {
    model: &'m Model,
    nets_done: BTreeSet<String>,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn net(&mut self, name: &str) -> Result<(), Usage> {
        if self.nets_done.insert(name.to_string()) {
            self.diags.extend(check_net(self.model, name)?);
        }
        Ok(())
    }

    /// A view over a broken net cannot be resolved; the net's own findings
    /// stand in for it.
    fn view(&mut self, name: &str) -> Result<(), Usage> {
        match check_view(self.model, name) {
            Ok(d) => self.diags.extend(d),
            Err(CheckError::BaseNetInvalid(net)) => self.net(&net)?,
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }
}

fn check(
    model: &Model,
    file: &Path,
    net: Option<&str>,
    view: Option<&str>,
) -> Result<(String, Vec<Diagnostic>), Usage> {
    let mut c = Checker {
        model,
        nets_done: BTreeSet::new(),
        diags: Vec::new(),
    };
    let mut subjects = Vec::new();
    if let Some(n) = net {
        c.net(n)?;
        subjects.push(n.to_string());
    }
    if let Some(v) = view {
        c.view(v)?;
        subjects.push(v.to_string());
    }
    if subjects.is_empty() {
        for n in model.funcnets.keys() {
            c.net(n)?;
        }
        for v in model.views.keys() {
            c.view(v)?;
        }
        let bound: BTreeSet<&Ident> = model.bindings.keys().collect();
        for (name, fd) in &model.feature_diagrams {
            if !bound.contains(name) {
                c.diags.extend(validate_diagram(fd));
            }
        }
        for b in model.bindings.keys() {
            c.diags.extend(validate_binding(model, b)?);
        }
        subjects.push(file.display().to_string());
    }
    Ok((subjects.join(", "), c.diags))
}

fn derive(
    model: &Model,
    binding: &str,
    config: Option<Vec<String>>,
    dir: Option<&Path>,
    emit: Emit,
    out: &mut dyn Write,
) -> Result<i32, Usage> {
    let deriver = match Deriver::new(model, binding) {
        Ok(d) => d,
        Err(VariantError::BindingInvalid(name, diags)) => {
            let report = Report::new(name, diags);
            out.write_all(render_report(&report, Format::Text).as_bytes())?;
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let variants: Vec<VariantView> = match config {
        Some(names) => {
            let selected = names
                .iter()
                .map(|n| Ident::new(n.trim()))
                .collect::<Result<BTreeSet<_>, _>>()?;
            let config = deriver.diagram().configuration(selected);
            vec![deriver.derive(&config)?]
        }
        None => deriver.derive_all()?,
    };
    let net = &deriver.net().name;
    let render = |v: &VariantView| {
        let dot = render_dot(v.variant_id(), net, &v.content);
        let fnv = print_view(&v.to_view_def(net));
        (dot, fnv)
    };

    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| Usage(format!("cannot create {}: {e}", dir.display())))?;
            for v in &variants {
                let (dot, fnv) = render(v);
                let mut files = Vec::new();
                if emit != Emit::Fnv {
                    files.push((dir.join(format!("{}.dot", v.variant_id())), dot));
                }
                if emit != Emit::Dot {
                    files.push((dir.join(format!("{}.fnv", v.variant_id())), fnv));
                }
                for (path, text) in files {
                    std::fs::write(&path, text)
                        .map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?;
                    writeln!(out, "{}", path.display())?;
                }
            }
        }
        None => {
            for (i, v) in variants.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                let (dot, fnv) = render(v);
                if emit != Emit::Dot {
                    out.write_all(fnv.as_bytes())?;
                }
                if emit == Emit::Both {
                    writeln!(out)?;
                }
                if emit != Emit::Fnv {
                    out.write_all(dot.as_bytes())?;
                }
            }
        }
    }
    Ok(0)
}
