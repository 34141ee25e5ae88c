/** Single-page session UI.
 *
 * A pure client of the session REST API: every displayed value comes
 * verbatim from service JSON, and no verification result is ever
 * recomputed client-side. One request is in flight per session at most;
 * further submissions queue.
 */

import { ApiClient, ApiError, ConnectionError } from "./api.js";
import { drawRadar } from "./radar.js";
import { drawSparkline } from "./sparkline.js";
import { PERSONAS, SAMPLE_ARTIFACTS } from "./samples.js";
import {
  DIMENSIONS,
  type ArtifactPayload,
  type PreferenceVector,
  type SessionPayload,
} from "./types.js";

interface TranscriptEntry {
  feedback: string | null;
  narrative: string;
  validated: boolean;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

function testId(root: ParentNode, id: string): HTMLElement {
  const node = root.querySelector(`[data-testid="${id}"]`);
  if (!node) throw new Error(`missing element ${id}`);
  return node as HTMLElement;
}

export class App {
  session: SessionPayload | null = null;
  trajectory: PreferenceVector[] = [];
  transcript: TranscriptEntry[] = [];
  private lastAction: (() => Promise<void>) | null = null;

  constructor(
    readonly root: HTMLElement,
    readonly client: ApiClient,
  ) {
    this.renderShell();
  }

  // -- layout --------------------------------------------------------------

  private renderShell(): void {
    this.root.innerHTML = "";
    const banner = el("div", { "data-testid": "connection-banner", hidden: "" });
    banner.append(
      el("span", { "data-testid": "connection-message" }),
      this.button("retry", "Retry", () => void this.retry()),
    );
    this.root.append(banner, this.buildSetupPanel(), this.buildSessionPanel());
    this.showPanel("setup");
  }

  private buildSetupPanel(): HTMLElement {
    const panel = el("section", { "data-testid": "setup-panel", class: "panel" });
    panel.append(el("h2", {}, "Start a session"));

    const samplePicker = el("select", { "data-testid": "sample-picker" });
    samplePicker.append(el("option", { value: "" }, "choose a sample case"));
    for (const name of Object.keys(SAMPLE_ARTIFACTS)) {
      samplePicker.append(el("option", { value: name }, name));
    }
    const upload = el("input", {
      type: "file",
      accept: ".json,application/json",
      "data-testid": "artifact-upload",
    });
    const personaPicker = el("select", { "data-testid": "persona-picker" });
    for (const persona of PERSONAS) {
      personaPicker.append(el("option", { value: persona }, persona));
    }
    const rag = el("input", { type: "checkbox", "data-testid": "rag-toggle" });
    rag.checked = true;

    const ragLabel = el("label", {}, " ground claims in the corpus");
    ragLabel.prepend(rag);
    panel.append(
      el("label", {}, "Case: "),
      samplePicker,
      el("label", {}, " or upload: "),
      upload,
      el("label", {}, " Audience: "),
      personaPicker,
      ragLabel,
      this.button("start", "Start session", () => void this.startFromForm()),
      el("ul", { "data-testid": "violations", class: "violations" }),
    );
    return panel;
  }

  private buildSessionPanel(): HTMLElement {
    const panel = el("section", { "data-testid": "session-panel", class: "panel", hidden: "" });
    panel.append(
      el("div", { "data-testid": "status-banner", class: "status" }),
      el("h2", {}, "Narrative"),
      el("article", { "data-testid": "narrative", class: "narrative" }),
      el("div", { "data-testid": "badges", class: "badges" }),
      el("h3", {}, "Style state"),
    );

    const radar = el("canvas", {
      "data-testid": "radar",
      width: "240",
      height: "240",
    });
    const prefList = el("dl", { "data-testid": "preference" });
    const sparklines = el("div", { "data-testid": "sparklines", class: "sparklines" });
    for (const dim of DIMENSIONS) {
      const row = el("div", { class: "sparkline-row" });
      row.append(
        el("span", {}, dim),
        el("canvas", {
          "data-testid": `sparkline-${dim}`,
          width: "160",
          height: "36",
        }),
      );
      sparklines.append(row);
    }
    panel.append(radar, prefList, sparklines);

    panel.append(el("h3", {}, "Conversation"));
    panel.append(el("ol", { "data-testid": "transcript", class: "transcript" }));

    const form = el("form", { "data-testid": "feedback-form" });
    const input = el("input", {
      type: "text",
      "data-testid": "feedback-input",
      placeholder: "e.g. more technical, shorter, what should I do",
    });
    const submit = this.button("feedback-submit", "Send feedback", () => undefined);
    submit.setAttribute("type", "submit");
    form.append(input, submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitFeedback(input.value);
    });
    panel.append(form, this.button("confirm", "Confirm profile", () => void this.confirmProfile()));
    return panel;
  }

  private button(id: string, label: string, onClick: () => void): HTMLButtonElement {
    const node = el("button", { "data-testid": id, type: "button" }, label);
    node.addEventListener("click", onClick);
    return node;
  }

  private showPanel(which: "setup" | "session"): void {
    testId(this.root, "setup-panel").hidden = which !== "setup";
    testId(this.root, "session-panel").hidden = which !== "session";
  }

  // -- actions ---------------------------------------------------------------

  private async startFromForm(): Promise<void> {
    const picker = testId(this.root, "sample-picker") as HTMLSelectElement;
    const upload = testId(this.root, "artifact-upload") as HTMLInputElement;
    const persona = (testId(this.root, "persona-picker") as HTMLSelectElement).value;
    const rag = (testId(this.root, "rag-toggle") as HTMLInputElement).checked;

    let artifact: ArtifactPayload | null = null;
    if (upload.files && upload.files.length > 0) {
      try {
        artifact = JSON.parse(await upload.files[0].text()) as ArtifactPayload;
      } catch {
        this.renderViolations(["uploaded file is not valid JSON"]);
        return;
      }
    } else if (picker.value) {
      artifact = SAMPLE_ARTIFACTS[picker.value];
    }
    if (!artifact) {
      this.renderViolations(["pick a sample case or upload an artifact file"]);
      return;
    }
    await this.start(artifact, persona, rag);
  }

  async start(artifact: ArtifactPayload, persona: string, rag = true): Promise<void> {
    this.lastAction = () => this.start(artifact, persona, rag);
    await this.guard(async () => {
      const session = await this.client.startSession({
        artifact,
        persona,
        mode: "full",
        rag,
      });
      this.session = session;
      this.trajectory = [session.s];
      this.transcript = [
        {
          feedback: null,
          narrative: session.narrative?.display_text ?? "(no narrative)",
          validated: session.narrative?.validated ?? false,
        },
      ];
      this.renderViolations([]);
      this.showPanel("session");
      this.renderSession();
    });
  }

  async resume(sessionId: string): Promise<void> {
    this.lastAction = () => this.resume(sessionId);
    await this.guard(async () => {
      const session = await this.client.getSession(sessionId);
      const history = await this.client.history(sessionId);
      this.session = session;
      this.trajectory = history.turns.length
        ? [history.turns[0].s_before, ...history.turns.map((t) => t.s_after)]
        : [session.s];
      this.transcript = history.turns.map((turn) => ({
        feedback: turn.feedback,
        narrative:
          turn.attempts[turn.final_index]?.candidate.display_text ?? "(no narrative)",
        validated: turn.success,
      }));
      this.showPanel("session");
      this.renderSession();
    });
  }

  async submitFeedback(text: string): Promise<void> {
    if (!this.session || this.session.status !== "active") return;
    if (!text.trim()) return; // blocked client-side
    const sessionId = this.session.session_id;
    this.lastAction = () => this.submitFeedback(text);
    await this.guard(async () => {
      const session = await this.client.sendFeedback(sessionId, text);
      this.session = session;
      this.trajectory.push(session.s);
      this.transcript.push({
        feedback: text,
        narrative: session.narrative?.display_text ?? "(no narrative)",
        validated: session.narrative?.validated ?? false,
      });
      (testId(this.root, "feedback-input") as HTMLInputElement).value = "";
      this.renderSession();
    });
  }

  async confirmProfile(): Promise<void> {
    if (!this.session || this.session.status !== "active") return;
    const sessionId = this.session.session_id;
    this.lastAction = () => this.confirmProfile();
    await this.guard(async () => {
      await this.client.confirm(sessionId);
      this.session = await this.client.getSession(sessionId);
      this.renderSession();
    });
  }

  async refresh(): Promise<void> {
    if (!this.session) return;
    const session = await this.client.getSession(this.session.session_id);
    this.session = session;
    this.renderSession();
  }

  private async retry(): Promise<void> {
    if (this.lastAction) await this.lastAction();
  }

  private async guard(task: () => Promise<void>): Promise<void> {
    try {
      await task();
      this.setConnectionBanner(null);
    } catch (error) {
      if (error instanceof ConnectionError) {
        this.setConnectionBanner(error.message);
        return;
      }
      if (error instanceof ApiError) {
        if (error.violations.length > 0) {
          this.renderViolations(error.violations);
          return;
        }
        this.renderViolations([error.message]);
        return;
      }
      throw error;
    }
  }

  // -- rendering -------------------------------------------------------------

  private setConnectionBanner(message: string | null): void {
    const banner = testId(this.root, "connection-banner");
    banner.hidden = message === null;
    testId(this.root, "connection-message").textContent = message ?? "";
  }

  private renderViolations(violations: string[]): void {
    const list = testId(this.root, "violations");
    list.innerHTML = "";
    for (const violation of violations) {
      list.append(el("li", {}, violation));
    }
  }

  private renderSession(): void {
    const session = this.session;
    if (!session) return;

    const banner = testId(this.root, "status-banner");
    banner.dataset.status = session.status;
    banner.textContent =
      session.status === "confirmed"
        ? `Profile confirmed for ${session.persona}. Inputs are locked.`
        : session.status === "failed"
          ? "Generation could not satisfy all checks within budget; shown narrative is unvalidated."
          : `Session with ${session.persona} (${session.mode}), ${session.attempts} generation attempt(s) so far.`;

    testId(this.root, "narrative").textContent =
      session.narrative?.display_text ?? "(no narrative)";

    this.renderBadges();
    this.renderPreference();
    this.renderTranscript();

    const locked = session.status !== "active";
    (testId(this.root, "feedback-input") as HTMLInputElement).disabled = locked;
    (testId(this.root, "feedback-submit") as HTMLButtonElement).disabled = locked;
    const confirm = testId(this.root, "confirm") as HTMLButtonElement;
    confirm.disabled = locked || !(session.narrative?.validated ?? false);
    confirm.title = confirm.disabled
      ? "available once a validated narrative exists"
      : "";
  }

  private renderBadges(): void {
    const report = this.session?.report;
    const badges = testId(this.root, "badges");
    badges.innerHTML = "";
    if (!report) return;
    const entries: [string, boolean, string][] = [
      [
        "faithfulness",
        report.passed_faithfulness,
        report.passed_faithfulness
          ? "all tagged values match the explanation"
          : `${report.numeric_mismatches.length} mismatch(es), ` +
            `${report.unknown_references.length} unknown reference(s), ` +
            `${report.untagged_numerals.length} untagged number(s)`,
      ],
      [
        "completeness",
        report.passed_completeness,
        report.passed_completeness
          ? "every counterfactual feature is referenced"
          : `missing: ${report.missing_features.join(", ")}`,
      ],
      [
        "style",
        report.passed_style,
        report.passed_style
          ? "within tolerance on every dimension"
          : `off target: ${report.failing_style_dims.join(", ")}`,
      ],
    ];
    for (const [name, passed, detail] of entries) {
      const badge = el(
        "span",
        {
          "data-testid": `badge-${name}`,
          class: `badge ${passed ? "pass" : "fail"}`,
          title: detail,
        },
        `${name}: ${passed ? "pass" : "fail"}`,
      );
      badges.append(badge);
    }
  }

  private renderPreference(): void {
    const session = this.session;
    if (!session) return;
    const list = testId(this.root, "preference");
    list.innerHTML = "";
    for (const dim of DIMENSIONS) {
      list.append(el("dt", {}, dim));
      // String() keeps the value verbatim (shortest round-trip form)
      list.append(
        el("dd", { "data-testid": `pref-${dim}` }, String(session.s[dim])),
      );
    }
    drawRadar(
      testId(this.root, "radar") as HTMLCanvasElement,
      session.s,
      session.target,
    );
    for (const dim of DIMENSIONS) {
      drawSparkline(
        testId(this.root, `sparkline-${dim}`) as HTMLCanvasElement,
        this.trajectory.map((s) => s[dim]),
      );
    }
  }

  private renderTranscript(): void {
    const list = testId(this.root, "transcript");
    list.innerHTML = "";
    for (const entry of this.transcript) {
      const item = el("li", { class: "turn" });
      if (entry.feedback !== null) {
        item.append(el("p", { class: "feedback-line" }, `you: ${entry.feedback}`));
      }
      item.append(
        el(
          "p",
          { class: entry.validated ? "narrative-line" : "narrative-line unvalidated" },
          entry.narrative,
        ),
      );
      list.append(item);
    }
  }
}
