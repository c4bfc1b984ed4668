// Pure HTML builders for every panel. No DOM access here — main.ts owns
// mounting and events — so these are unit-testable in plain node.

import { DiffRow, lineDiff } from './diff.js';
import {
	AnchorView,
	BlockView,
	MessageView,
	TaskNode,
	VersionRecord,
	ViewModel
} from './viewmodel.js';

export const MECHANISM_COLORS: Record<string, string> = {
	refer: '#e67e22',
	request: '#00a8cc',
	share: '#d63384',
	link: '#7048e8'
};

export function escapeHtml(text: string): string {
	return text
		.replace(/&/g, '&amp;')
		.replace(/</g, '&lt;')
		.replace(/>/g, '&gt;')
		.replace(/"/g, '&quot;');
}

function highlightAnchors(content: string, anchors: AnchorView[]): string {
	// wrap valid anchor spans in marks; fall back to plain text on overlap
	const spans = anchors
		.filter((a) => a.status === 'valid' && !a.wholeSection && a.end > a.start)
		.sort((a, b) => a.start - b.start);
	let out = '';
	let at = 0;
	for (const a of spans) {
		if (a.start < at) continue; // overlapping: skip
		out += escapeHtml(content.slice(at, a.start));
		out += `<mark class="anchor anchor-${a.status}" data-anchor="${a.id}">`;
		out += escapeHtml(content.slice(a.start, a.end));
		out += '</mark>';
		at = a.end;
	}
	out += escapeHtml(content.slice(at));
	return out;
}

export function renderEditor(view: ViewModel): string {
	const anchorsByBlock = new Map<string, AnchorView[]>();
	for (const a of view.anchors) {
		const list = anchorsByBlock.get(a.blockId) ?? [];
		list.push(a);
		anchorsByBlock.set(a.blockId, list);
	}
	const parts: string[] = [];
	for (const b of view.blocks) {
		const anchors = anchorsByBlock.get(b.id) ?? [];
		const body = highlightAnchors(b.content, anchors);
		const author = `<span class="author" title="last modified by">${escapeHtml(
			b.authorLast
		)}</span>`;
		let inner = '';
		if (b.kind === 'heading') {
			const level = Math.min(Math.max(b.level, 1), 3);
			inner = `<h${level} class="block-text">${body}</h${level}>`;
		} else if (b.kind === 'code') {
			inner = `<pre class="block-text code">${body}</pre>`;
			if (b.execResult) {
				const r = b.execResult;
				inner += `<div class="exec exec-${r.status}">${escapeHtml(
					r.status
				)} — ${escapeHtml(r.stdout || r.stderr || r.valueRepr || '')}</div>`;
			}
		} else {
			inner = `<div class="block-text ${b.kind}">${body}</div>`;
		}
		const actions =
			b.kind === 'prompt'
				? '<button data-act="generate">generate</button><button data-act="explain">explain</button><button data-act="history">history</button>'
				: b.kind === 'code'
					? '<button data-act="run">run</button><button data-act="promptFromCode">prompt from comments</button><button data-act="history">history</button>'
					: '';
		parts.push(
			`<section class="block block-${b.kind}" data-block="${b.id}">${author}${inner}` +
				`<div class="block-actions">${actions}</div></section>`
		);
	}
	return parts.join('\n');
}

function renderBadges(badges: [string, string, string][]): string {
	return badges
		.map(
			([anchorId, kind, creator]) =>
				`<i class="badge badge-${kind}" data-anchor="${anchorId}" ` +
				`style="background:${MECHANISM_COLORS[kind] ?? '#999'}" ` +
				`title="${escapeHtml(kind)} by ${escapeHtml(creator)}"></i>`
		)
		.join('');
}

export function renderWiki(tree: TaskNode[], folded: Set<string>): string {
	const renderTask = (node: TaskNode): string => {
		const key = node.block ?? '(root)';
		const isFolded = folded.has(key);
		const caret = `<button class="fold" data-task="${key}">${isFolded ? '▸' : '▾'}</button>`;
		const label = `<span class="task-label" data-navigate="${key}">${escapeHtml(
			node.label || '(untitled)'
		)}</span>`;
		let html = `<li class="task">${caret}${label}`;
		if (!isFolded) {
			const prompts = node.prompts
				.map(
					(p) =>
						`<li class="wiki-prompt${p.badges.length ? ' has-actions' : ''}" data-navigate="${p.block}" data-block="${p.block}">` +
						`${p.badges.length ? '<i class="dot"></i>' : ''}${escapeHtml(p.label)}${renderBadges(p.badges)}</li>`
				)
				.join('');
			const children = node.children.map(renderTask).join('');
			html += `<ul>${prompts}${children}</ul>`;
		}
		return html + '</li>';
	};
	return `<ul class="wiki">${tree.map(renderTask).join('')}</ul>`;
}

export function renderMessages(messages: MessageView[]): string {
	// the server already sends canonical panel order
	const rows = messages
		.map(
			(m) =>
				`<li class="message${m.processed ? '' : ' unprocessed'}" data-message="${m.id}"` +
				`${m.blockId ? ` data-navigate="${m.blockId}"` : ''}>` +
				`${m.processed ? '' : '<i class="dot"></i>'}` +
				`<b>${escapeHtml(m.actionType)}</b> by ${escapeHtml(m.actor)} ` +
				`<span class="ts">t${m.lamport}</span>` +
				(m.processed ? '' : '<button data-resolve>mark seen</button>') +
				'</li>'
		)
		.join('');
	return `<ul class="messages">${rows}</ul>`;
}

function renderDiffRows(rows: DiffRow[]): string {
	return rows
		.map((r) => `<div class="diff-${r.type}">${escapeHtml(r.text)}</div>`)
		.join('');
}

export function renderHistory(records: VersionRecord[], selected: number | null): string {
	if (!records.length) return '<p class="empty">no versions yet</p>';
	const pick = selected ?? records.length;
	const rec = records[pick - 1];
	const parent = pick > 1 ? records[pick - 2] : null;
	const list = records
		.map(
			(r) =>
				`<li class="version${r.versionNo === pick ? ' selected' : ''}" data-version="${r.versionNo}">` +
				`v${r.versionNo} <b>${escapeHtml(r.cause)}</b> by ${escapeHtml(r.actor)}` +
				`${r.linkId ? ` <span class="via">via ${escapeHtml(r.linkId)}</span>` : ''}` +
				` <button data-rollback="${r.versionNo}">rollback</button></li>`
		)
		.join('');
	const promptDiff = renderDiffRows(lineDiff(parent?.promptText ?? '', rec.promptText));
	const codeDiff = renderDiffRows(lineDiff(parent?.codeText ?? '', rec.codeText));
	return (
		`<ul class="versions">${list}</ul>` +
		`<div class="diff"><h4>prompt</h4>${promptDiff}<h4>code</h4>${codeDiff}</div>`
	);
}

export interface Explanation {
	steps: string[];
	spanMap: [[number, number], [number, number]][];
	unmapped: number[];
}

export function renderExplain(exp: Explanation, prompt: string, code: string): string {
	const hues = [25, 145, 205, 265, 325, 85];
	let promptHtml = '';
	let at = 0;
	const spans = [...exp.spanMap].sort((x, y) => x[0][0] - y[0][0]);
	spans.forEach(([pspan], i) => {
		promptHtml += escapeHtml(prompt.slice(at, pspan[0]));
		promptHtml += `<mark style="background:hsl(${hues[i % hues.length]},80%,85%)">${escapeHtml(
			prompt.slice(pspan[0], pspan[1])
		)}</mark>`;
		at = pspan[1];
	});
	promptHtml += escapeHtml(prompt.slice(at));
	const codeLines = code.split('\n').map((line, i) => {
		const pair = spans.findIndex(([, lines]) => i >= lines[0] && i <= lines[1]);
		if (pair >= 0) {
			return `<div style="background:hsl(${hues[pair % hues.length]},80%,90%)">${escapeHtml(line)}</div>`;
		}
		return `<div class="unmapped">${escapeHtml(line)}</div>`;
	});
	const steps = exp.steps.map((s) => `<li>${escapeHtml(s)}</li>`).join('');
	return (
		`<ol class="steps">${steps}</ol>` +
		`<div class="explain-prompt">${promptHtml}</div>` +
		`<div class="explain-code">${codeLines.join('')}</div>`
	);
}

export function renderPopup(p: { linkId: string; from: string; message: string | null }): string {
	return (
		`<div class="popup" data-link="${p.linkId}">` +
		`<p><b>${escapeHtml(p.from)}</b> wants to share context with you` +
		`${p.message ? `: “${escapeHtml(p.message)}”` : ''}</p>` +
		'<button data-accept>Accept</button><button data-decline>Decline</button></div>'
	);
}

export function renderPresence(presences: Map<string, Record<string, unknown>>): string {
	const chips = [...presences.entries()]
		.filter(([, p]) => p.online !== false)
		.map(([actor, p]) => {
			const cursor = p.cursor as [string, number] | null;
			const where = cursor ? ` @ ${escapeHtml(String(cursor[0]))}:${cursor[1]}` : '';
			return `<span class="presence-chip">${escapeHtml(actor)}${where}</span>`;
		});
	return chips.join('');
}
