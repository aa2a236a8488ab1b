import { createHmac } from 'node:crypto';
import { inject } from 'vitest';
import { ApiClient, type Credentials } from '../src/api.js';

// serve's default dev secret; tests compute header signatures directly
export const SECRET = 'dev-secret-not-for-production';

export function baseUrl(): string {
  return inject('baseUrl' as never) as string;
}

export function signature(user: string): string {
  return createHmac('sha256', SECRET).update(user).digest('hex');
}

export function creds(user: string): Credentials {
  return { user, signature: signature(user) };
}

export function apiClient(user?: string): ApiClient {
  return new ApiClient(baseUrl(), user ? creds(user) : null);
}

// -- DOM driving ----------------------------------------------------------

export function $(selector: string, scope: ParentNode = document): HTMLElement {
  const el = scope.querySelector(selector);
  if (!el) throw new Error(`no element matches ${selector}`);
  return el as HTMLElement;
}

export function maybe(selector: string, scope: ParentNode = document): HTMLElement | null {
  return scope.querySelector(selector);
}

export function setField(form: ParentNode, name: string, value: string): void {
  const field = form.querySelector(`[name="${name}"]`);
  if (!field) throw new Error(`form has no field ${name}`);
  (field as HTMLInputElement).value = value;
}

export function submit(form: HTMLElement): void {
  form.dispatchEvent(new Event('submit', { bubbles: true, cancelable: true }));
}

export function click(el: HTMLElement): void {
  el.dispatchEvent(new MouseEvent('click', { bubbles: true, cancelable: true }));
}

/** Let queued microtasks and the hashchange task run. */
export async function tick(): Promise<void> {
  await new Promise((r) => setTimeout(r, 0));
}
