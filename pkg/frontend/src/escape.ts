// Every untrusted string (objectives, evidence fields, explanation lines,
// API error details) must pass through here before touching innerHTML.
// Telemetry content is hostile by assumption.

const REPLACEMENTS: Record<string, string> = {
  '&': '&amp;',
  '<': '&lt;',
  '>': '&gt;',
  '"': '&quot;',
  "'": '&#39;',
};

export function escapeHtml(value: unknown): string {
  return String(value).replace(/[&<>"']/g, (ch) => REPLACEMENTS[ch]);
}

/** Tagged template: literals stay raw, interpolations get escaped. */
export function html(strings: TemplateStringsArray, ...values: unknown[]): string {
  let out = strings[0];
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    // a value produced by html`` or rawHtml() is trusted markup
    out += v instanceof Raw ? v.markup : escapeHtml(v);
    out += strings[i + 1];
  }
  return out;
}

class Raw {
  constructor(readonly markup: string) {}
}

/** Mark an already-rendered fragment as safe to splice into html``. */
export function rawHtml(markup: string): Raw {
  return new Raw(markup);
}

/** Join pre-rendered fragments without re-escaping them. */
export function joinHtml(fragments: string[]): Raw {
  return new Raw(fragments.join(''));
}
